#pragma once

#include <optional>
#include <string>
#include <vector>

#include "loopgibbs/gibbs.hpp"
#include "loopgibbs/sample.hpp"

namespace loopgibbs {

// Panel of bounded test observables. Time-average observables are constant
// on boundary classes; the path value at tau = 0 is not.

Observable tanh_time_average(const Coord& site);
Observable gaussian_time_average(const Coord& site);
/// clamp(omega_site(0), -bound, bound).
Observable clipped_path_value(const Coord& site, double bound = 3.0);
/// clamp(mean over `sites` of the time average, -bound, bound)^power. With no
/// sites the mean runs over the sample's own box, which makes the function
/// box-relative (not a fixed cylinder function across nested boxes).
Observable clipped_average_moment(int power, double bound = 3.0, std::vector<Coord> sites = {});
Observable constant_observable(double value);

/// ((1/|Lambda|) sum_j sqrt(beta) c_{0,j})^2. Loop samples only.
double order_parameter_p(const SampleView& s);
/// ((1/|Lambda|) sum_j x_j)^2. Classical samples only.
double order_parameter_q(const SampleView& s);
Observable order_parameter_p_observable();
Observable order_parameter_q_observable();

enum class Normalization { raw, beta_squared };

struct SweepPoint {
    Mass mass;
    /// Kind of the target behind this point.
    TargetKind kind;
    EstimateWithError estimate;
    /// Set when the point failed; the sweep continues.
    std::optional<std::string> error;
};

/// One estimate of f per mass. m = infinity selects the quasiclassical
/// target. Points are independent jobs with seeds derive_seed(mc.seed, {i}).
/// The mass grid must be ascending.
std::vector<SweepPoint> mass_sweep(const EnergyContext& ctx, const ModeBasis& basis, const std::vector<Mass>& masses,
                                   const Observable& f, const McParams& mc);

/// Divides estimate and error by beta^2.
EstimateWithError normalize(const EstimateWithError& e, double beta, Normalization how);

struct MonotonicityReport {
    /// False when the hypotheses fail; nothing is asserted then.
    bool applicable = false;
    bool passed = false;
    std::string reason;
    /// Indices i with P(m_{i+1}) < P(m_i) - 3 combined standard errors.
    std::vector<std::size_t> violations;
};

/// Nondecreasing P along an ascending mass grid, for J >= 0 nonincreasing in
/// distance and potentials of the form a x^2 + sum_{l>=2} b_l x^{2l}.
MonotonicityReport monotonicity_check(const EnergyContext& ctx, const std::vector<SweepPoint>& sweep,
                                      double sigmas = 3.0);

}  // namespace loopgibbs
