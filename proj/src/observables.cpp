#include "loopgibbs/observables.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace loopgibbs {

Observable tanh_time_average(const Coord& site)
{
    return {"tanh_xbar" + format_coord(site), [site](const SampleView& s) { return std::tanh(s.time_average(site)); },
            true};
}

Observable gaussian_time_average(const Coord& site)
{
    return {"gauss_xbar" + format_coord(site),
            [site](const SampleView& s) {
                const double x = s.time_average(site);
                return std::exp(-x * x);
            },
            true};
}

Observable clipped_path_value(const Coord& site, double bound)
{
    return {"clip_omega0" + format_coord(site),
            [site, bound](const SampleView& s) { return std::clamp(s.path_value(site, 0.0), -bound, bound); }, false};
}

Observable clipped_average_moment(int power, double bound, std::vector<Coord> sites)
{
    if (power < 1) throw std::invalid_argument("moment power must be positive");
    auto clip = [power, bound](double m) { return std::pow(std::clamp(m, -bound, bound), power); };
    if (sites.empty())
        return {"clip_mean_xbar^" + std::to_string(power),
                [clip](const SampleView& s) {
                    const std::size_t n = s.box().size();
                    double m = 0.0;
                    for (std::size_t j = 0; j < n; ++j) m += s.time_average(j);
                    return clip(m / static_cast<double>(n));
                },
                true};
    return {"clip_mean_xbar^" + std::to_string(power),
            [clip, sites = std::move(sites)](const SampleView& s) {
                double m = 0.0;
                for (const auto& c : sites) m += s.time_average(c);
                return clip(m / static_cast<double>(sites.size()));
            },
            true};
}

Observable constant_observable(double value)
{
    return {"const", [value](const SampleView&) { return value; }, true};
}

double order_parameter_p(const SampleView& s)
{
    if (s.is_classical()) throw std::invalid_argument("P needs a loop-valued sample");
    const double root_beta = std::sqrt(s.beta());
    const std::size_t n = s.box().size();
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += root_beta * s.site(j)[0];
    const double mean = sum / static_cast<double>(n);
    return mean * mean;
}

double order_parameter_q(const SampleView& s)
{
    if (!s.is_classical()) throw std::invalid_argument("Q needs a classical sample");
    const std::size_t n = s.box().size();
    double sum = 0.0;
    for (double x : s.interior()) sum += x;
    const double mean = sum / static_cast<double>(n);
    return mean * mean;
}

Observable order_parameter_p_observable() { return {"P", order_parameter_p, true}; }
Observable order_parameter_q_observable() { return {"Q", order_parameter_q, true}; }

std::vector<SweepPoint> mass_sweep(const EnergyContext& ctx, const ModeBasis& basis, const std::vector<Mass>& masses,
                                   const Observable& f, const McParams& mc)
{
    if (!std::is_sorted(masses.begin(), masses.end()) ||
        std::adjacent_find(masses.begin(), masses.end()) != masses.end())
        throw std::invalid_argument("mass grid must be strictly ascending");
    std::vector<SweepPoint> out;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        const GibbsTarget target = GibbsTarget::loops(ctx, basis, masses[i]);
        SweepPoint p{masses[i], target.kind(), {}, std::nullopt};
        McParams point = mc;
        point.seed = derive_seed(mc.seed, {i});
        try {
            p.estimate = expectation(target, f, point);
        } catch (const std::exception& e) {
            p.error = e.what();
        }
        out.push_back(std::move(p));
    }
    return out;
}

EstimateWithError normalize(const EstimateWithError& e, double beta, Normalization how)
{
    if (how == Normalization::raw) return e;
    EstimateWithError r = e;
    r.value /= beta * beta;
    r.std_error /= beta * beta;
    return r;
}

MonotonicityReport monotonicity_check(const EnergyContext& ctx, const std::vector<SweepPoint>& sweep, double sigmas)
{
    MonotonicityReport r;
    if (!ctx.coupling().is_nonnegative_nonincreasing(ctx.box().dimension())) {
        r.reason = "coupling is not nonnegative and nonincreasing in distance";
        return r;
    }
    if (!ctx.potential().satisfies_phi4_form()) {
        r.reason = "potential is not of the form a x^2 + sum b_l x^{2l} with b_p > 0, b_l >= 0";
        return r;
    }
    for (std::size_t i = 0; i + 1 < sweep.size(); ++i)
        if (!(sweep[i].mass < sweep[i + 1].mass)) {
            r.reason = "mass grid is not ascending";
            return r;
        }
    for (const auto& p : sweep)
        if (p.error) {
            r.reason = "sweep point m = " + p.mass.str() + " failed: " + *p.error;
            return r;
        }
    r.applicable = true;
    for (std::size_t i = 0; i + 1 < sweep.size(); ++i) {
        const auto& a = sweep[i].estimate;
        const auto& b = sweep[i + 1].estimate;
        if (b.value < a.value - sigmas * combined_stderr(a.std_error, b.std_error)) r.violations.push_back(i);
    }
    r.passed = r.violations.empty();
    r.reason = r.passed ? "nondecreasing within tolerance" : std::to_string(r.violations.size()) + " violation(s)";
    return r;
}

}  // namespace loopgibbs
