#include "loopgibbs/sample.hpp"

#include <cmath>
#include <stdexcept>

namespace loopgibbs {

SampleView::SampleView(const EnergyContext& ctx, const ModeBasis& basis, std::span<const double> interior)
    : ctx_(&ctx), basis_(basis), interior_(interior)
{
    if (interior.size() != ctx.box().size() * basis.mode_count()) throw std::invalid_argument("sample size mismatch");
}

SampleView::SampleView(const EnergyContext& ctx, std::span<const double> interior) : ctx_(&ctx), interior_(interior)
{
    if (interior.size() != ctx.box().size()) throw std::invalid_argument("sample size mismatch");
}

const ModeBasis& SampleView::basis() const
{
    if (!basis_) throw std::logic_error("classical samples have no loop basis");
    return *basis_;
}

double SampleView::time_average(std::size_t index) const
{
    auto c = site(index);
    return is_classical() ? c[0] : c[0] / std::sqrt(beta());
}

double SampleView::time_average(const Coord& site) const
{
    if (auto idx = box().find(site)) return time_average(*idx);
    return ctx_->boundary_time_average(site);
}

double SampleView::path_value(const Coord& s, double tau) const
{
    if (auto idx = box().find(s)) {
        if (is_classical()) return site(*idx)[0];
        auto c = site(*idx);
        double v = 0.0;
        for (std::size_t q = 0; q < c.size(); ++q)
            if (c[q] != 0.0) v += c[q] * basis_->basis_function(q, tau);
        return v;
    }
    if (const auto* loops = std::get_if<LoopField>(&ctx_->boundary())) {
        auto c = loops->at(s);
        double v = 0.0;
        for (std::size_t q = 0; q < c.size(); ++q)
            if (c[q] != 0.0) v += c[q] * loops->basis().basis_function(q, tau);
        return v;
    }
    return ctx_->boundary_time_average(s);
}

}  // namespace loopgibbs
