#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "loopgibbs/sample.hpp"
#include "loopgibbs/target.hpp"

namespace loopgibbs {

/// Probabilists' Gauss-Hermite rule: sum_i w_i f(x_i) ~ E f(Z), Z ~ N(0, 1).
/// Weights sum to one.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermiteRule gauss_hermite(std::size_t n);

struct QuadratureOptions {
    /// Nodes per zero-mode (or classical-site) dimension.
    std::size_t nodes = 40;
    /// Nodes per oscillatory-mode dimension; 0 means `nodes`.
    std::size_t oscillatory_nodes = 0;
    /// Repeat with refined counts and compare.
    bool self_check = true;
    std::size_t refined_nodes = 60;
    /// 0 means 1.5 x the oscillatory count.
    std::size_t refined_oscillatory_nodes = 0;
    double self_check_tolerance = 1e-7;
    /// Zero-mode (and classical) nodes sit at s * sqrt(lambda) * z instead of
    /// sqrt(lambda) * z, with the prior ratio folded into the weights. s < 1
    /// concentrates nodes where a confining potential puts the mass.
    double zero_node_scale = 1.0;
    std::size_t max_dimensions = 8;
    double max_total_nodes = 1.2e8;
};

struct OracleEstimate {
    double value = 0.0;
    /// |refined - value|; NaN when the self-check did not run.
    double refinement_change = 0.0;
    bool self_check_passed = true;
    std::size_t dimensions = 0;
    std::vector<std::string> warnings;
};

/// Number of quadrature dimensions: (site, mode) pairs with nonzero prior
/// variance, or sites for classical targets.
std::size_t oracle_dimensions(const GibbsTarget& target);

/// Tensor-grid Gibbs expectations sum w e^{-E} f / sum w e^{-E}. Loop targets
/// must have n_max <= 2; dimension and node-count guards throw.
std::vector<OracleEstimate> oracle_expectations(const GibbsTarget& target, std::span<const Observable> fs,
                                                const QuadratureOptions& opts = {});
OracleEstimate oracle_expectation(const GibbsTarget& target, const Observable& f, const QuadratureOptions& opts = {});

/// log of the prior average of exp(-E).
OracleEstimate oracle_log_partition(const GibbsTarget& target, const QuadratureOptions& opts = {});

/// |int int f dpi_{inner}(.|omega) dpi_{outer}(.|zeta) - int f dpi_{outer}(.|zeta)|
/// by nested quadrature on matching grids. `inner` must be a sub-box of the
/// target's box; the target needs fixed boundary data.
double oracle_consistency(const GibbsTarget& outer, const LatticeBox& inner, const Observable& f,
                          const QuadratureOptions& opts = {});

/// Same as oracle_consistency; the sampler-side entry point.
double consistency_gap(const GibbsTarget& outer, const LatticeBox& inner, const Observable& f,
                       const QuadratureOptions& opts = {});

}  // namespace loopgibbs
