#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "loopgibbs/energy.hpp"

namespace loopgibbs {

/// Read-only view of omega_Lambda x zeta_{Lambda^c}: interior state from a
/// sampler or quadrature node, exterior from the context's boundary data.
/// Classical views carry one real per site instead of loop coefficients.
class SampleView {
public:
    /// Loop-valued view.
    SampleView(const EnergyContext& ctx, const ModeBasis& basis, std::span<const double> interior);
    /// Classical view.
    SampleView(const EnergyContext& ctx, std::span<const double> interior);

    bool is_classical() const { return !basis_.has_value(); }
    const EnergyContext& context() const { return *ctx_; }
    const LatticeBox& box() const { return ctx_->box(); }
    double beta() const { return ctx_->beta(); }
    const ModeBasis& basis() const;
    std::span<const double> interior() const { return interior_; }
    std::size_t site_dim() const { return is_classical() ? 1 : basis_->mode_count(); }

    /// Interior site by index.
    std::span<const double> site(std::size_t index) const
    {
        return interior_.subspan(index * site_dim(), site_dim());
    }
    double time_average(std::size_t index) const;

    /// Any site: interior sites read the state, exterior sites the boundary data.
    double time_average(const Coord& site) const;
    /// omega_site(tau). For classical views the constant value.
    double path_value(const Coord& site, double tau) const;

private:
    const EnergyContext* ctx_;
    std::optional<ModeBasis> basis_;
    std::span<const double> interior_;
};

/// Bounded cylinder function of a configuration. `class_invariant` declares
/// that f depends on loops only through their time averages, i.e. f is
/// constant on the classes Upsilon_beta(y).
struct Observable {
    std::string name;
    std::function<double(const SampleView&)> fn;
    bool class_invariant = false;

    double operator()(const SampleView& s) const { return fn(s); }
};

}  // namespace loopgibbs
