#include "loopgibbs/target.hpp"

#include <cmath>
#include <stdexcept>

namespace loopgibbs {

std::string to_string(TargetKind kind)
{
    switch (kind) {
    case TargetKind::quantum: return "quantum";
    case TargetKind::quasiclassical: return "quasiclassical";
    case TargetKind::classical: return "classical";
    case TargetKind::quantum_periodic: return "quantum-periodic";
    case TargetKind::quasiclassical_periodic: return "quasiclassical-periodic";
    case TargetKind::classical_periodic: return "classical-periodic";
    }
    return "unknown";
}

bool is_periodic(TargetKind kind)
{
    return kind == TargetKind::quantum_periodic || kind == TargetKind::quasiclassical_periodic ||
           kind == TargetKind::classical_periodic;
}

bool is_classical(TargetKind kind) { return kind == TargetKind::classical || kind == TargetKind::classical_periodic; }

bool is_quasiclassical(TargetKind kind)
{
    return kind == TargetKind::quasiclassical || kind == TargetKind::quasiclassical_periodic;
}

GibbsTarget::GibbsTarget(EnergyContext ctx, TargetKind kind, std::optional<ModeBasis> basis, Mass mass)
    : ctx_(std::move(ctx)), kind_(kind), basis_(std::move(basis)), mass_(mass)
{
    if (loopgibbs::is_periodic(kind_) != ctx_.is_periodic())
        throw std::invalid_argument("target kind " + to_string(kind_) + " does not match the context's boundary mode");
    if (is_classical()) {
        basis_.reset();
        prior_std_.assign(1, 1.0 / std::sqrt(ctx_.beta()));
        return;
    }
    if (!basis_) throw std::invalid_argument("loop targets need a mode basis");
    if (basis_->beta() != ctx_.beta()) throw std::invalid_argument("mode basis and context disagree on beta");
    if (is_quasiclassical(kind_) != mass_.is_infinite())
        throw std::invalid_argument("quasiclassical kinds pair with m = infinity and quantum kinds with finite m");
    CovarianceSpectrum spectrum(*basis_, mass_);
    for (double l : spectrum.eigenvalues()) prior_std_.push_back(std::sqrt(l));
}

GibbsTarget GibbsTarget::loops(EnergyContext ctx, const ModeBasis& basis, Mass mass)
{
    const bool periodic = ctx.is_periodic();
    TargetKind kind = mass.is_infinite() ? (periodic ? TargetKind::quasiclassical_periodic : TargetKind::quasiclassical)
                                         : (periodic ? TargetKind::quantum_periodic : TargetKind::quantum);
    return GibbsTarget(std::move(ctx), kind, basis, mass);
}

GibbsTarget GibbsTarget::classical(EnergyContext ctx)
{
    const TargetKind kind = ctx.is_periodic() ? TargetKind::classical_periodic : TargetKind::classical;
    return GibbsTarget(std::move(ctx), kind, std::nullopt, Mass::infinity());
}

const ModeBasis& GibbsTarget::basis() const
{
    if (!basis_) throw std::logic_error("classical targets have no loop basis");
    return *basis_;
}

std::size_t GibbsTarget::site_dim() const { return basis_ ? basis_->mode_count() : 1; }

EnergyModel GibbsTarget::energy_model() const
{
    return is_classical() ? EnergyModel::classical(ctx_, ctx_.beta()) : EnergyModel::loops(ctx_, *basis_);
}

SampleView GibbsTarget::view(std::span<const double> state) const
{
    return is_classical() ? SampleView(ctx_, state) : SampleView(ctx_, *basis_, state);
}

GibbsTarget GibbsTarget::with_boundary(BoundaryData boundary) const
{
    return GibbsTarget(ctx_.with_boundary(std::move(boundary)), kind_, basis_, mass_);
}

}  // namespace loopgibbs
