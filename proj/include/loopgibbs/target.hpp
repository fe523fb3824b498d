#pragma once

#include <optional>
#include <span>
#include <string>

#include "loopgibbs/energy.hpp"
#include "loopgibbs/gaussian.hpp"
#include "loopgibbs/sample.hpp"

namespace loopgibbs {

enum class TargetKind {
    quantum,                  ///< nu^(m)(. | zeta), prior gamma^(m)
    quasiclassical,           ///< nu^qc(. | zeta), prior gamma^qc (m = infinity)
    classical,                ///< mu(. | y), prior chi_beta, energy beta I
    quantum_periodic,         ///< nu^per
    quasiclassical_periodic,  ///< nu^qcp
    classical_periodic        ///< mu^per
};

std::string to_string(TargetKind kind);
bool is_periodic(TargetKind kind);
bool is_classical(TargetKind kind);
bool is_quasiclassical(TargetKind kind);

/// A conditional (or periodic) Gibbs measure: density exp(-E) against a
/// product Gaussian prior. Kind, boundary mode and spectrum must agree.
class GibbsTarget {
public:
    GibbsTarget(EnergyContext ctx, TargetKind kind, std::optional<ModeBasis> basis, Mass mass);

    /// Quantum kind for finite m, quasiclassical kind for m = infinity;
    /// periodic variants when the context is periodic.
    static GibbsTarget loops(EnergyContext ctx, const ModeBasis& basis, Mass mass);
    static GibbsTarget classical(EnergyContext ctx);

    TargetKind kind() const { return kind_; }
    const EnergyContext& context() const { return ctx_; }
    bool is_classical() const { return loopgibbs::is_classical(kind_); }
    const ModeBasis& basis() const;
    Mass mass() const { return mass_; }
    std::size_t sites() const { return ctx_.box().size(); }
    std::size_t site_dim() const;
    std::size_t state_size() const { return sites() * site_dim(); }

    /// Prior standard deviation per site coordinate: sqrt(lambda_q) for loops,
    /// 1/sqrt(beta) for classical sites. Zero marks frozen coordinates.
    std::span<const double> prior_std() const { return prior_std_; }

    EnergyModel energy_model() const;
    SampleView view(std::span<const double> state) const;

    /// Same target with another boundary condition.
    GibbsTarget with_boundary(BoundaryData boundary) const;

private:
    EnergyContext ctx_;
    TargetKind kind_;
    std::optional<ModeBasis> basis_;
    Mass mass_;
    std::vector<double> prior_std_;
};

}  // namespace loopgibbs
