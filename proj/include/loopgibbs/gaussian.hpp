#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "loopgibbs/loops.hpp"

namespace loopgibbs {

/// Reduced particle mass m > 0, with +infinity as a regular value
/// (the quasiclassical limit).
class Mass {
public:
    explicit Mass(double value);
    static Mass infinity() { return Mass(std::numeric_limits<double>::infinity()); }

    double value() const { return value_; }
    bool is_infinite() const { return value_ == std::numeric_limits<double>::infinity(); }
    /// "inf" or the shortest round-tripping decimal.
    std::string str() const;
    static Mass parse(const std::string& text);

    bool operator==(const Mass&) const = default;
    auto operator<=>(const Mass&) const = default;

private:
    double value_;
};

/// Eigenvalues lambda_q = (m q^2 + 1)^{-1} of S_beta(m) = (-m Delta_beta + 1)^{-1}
/// in the Fourier basis. At m = infinity only the constant mode survives.
class CovarianceSpectrum {
public:
    CovarianceSpectrum(const ModeBasis& basis, Mass mass);

    const ModeBasis& basis() const { return basis_; }
    Mass mass() const { return mass_; }
    double eigenvalue(std::size_t mode) const { return lambda_[mode]; }
    std::span<const double> eigenvalues() const { return lambda_; }
    /// Eigenvalue for an arbitrary signed frequency q (not limited to the basis).
    static double eigenvalue_at(double q, Mass mass);

private:
    ModeBasis basis_;
    Mass mass_;
    std::vector<double> lambda_;
};

/// SplitMix64 finaliser; the building block of the seed-splitting scheme.
std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based stream splitting: the seed of stream (i_1, ..., i_k) under
/// `root` is h(...h(h(root) ^ i_1)... ^ i_k) with h = splitmix64 applied to
/// (previous + golden-ratio increment). Depends only on the indices, never on
/// scheduling.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path);

using Rng = std::mt19937_64;

/// Exact sampler of the product of independent mode Gaussians N(0, lambda_q).
class GaussianSampler {
public:
    GaussianSampler(const CovarianceSpectrum& spectrum, std::uint64_t seed);

    const CovarianceSpectrum& spectrum() const { return spectrum_; }
    TemperatureLoop sample_loop();
    /// Fills `out` with one loop's coefficients.
    void sample_into(std::span<double> out);

private:
    CovarianceSpectrum spectrum_;
    std::vector<double> std_dev_;
    Rng rng_;
    std::normal_distribution<double> normal_;
};

/// Draws from chi_beta(dx) = sqrt(beta/2pi) exp(-beta x^2/2) dx, i.e. N(0, 1/beta).
class ClassicalSiteSampler {
public:
    ClassicalSiteSampler(double beta, std::uint64_t seed);
    double operator()();
    double beta() const { return beta_; }

private:
    double beta_;
    double std_dev_;
    Rng rng_;
    std::normal_distribution<double> normal_;
};

/// exp(-1/2 sum_q lambda_q phi_q^2): the Fourier transform of the Gaussian
/// measure evaluated at phi.
double characteristic_function(const CovarianceSpectrum& spectrum, std::span<const double> phi);

enum class TraceSum {
    partial,         ///< sum over 1 <= n <= n_max
    partial_tailed,  ///< partial sum plus the integral estimate of the tail
    exact            ///< closed form
};

/// trace(S_{beta,Lambda}(m) - S^qc_{beta,Lambda}) = |Lambda| sum_{q != 0} (m q^2 + 1)^{-1}.
double trace_distance(Mass mass, double beta, std::size_t sites, TraceSum how, long long n_max = 0);
/// Upper bound |Lambda| beta^2 / (12 m).
double trace_distance_bound(Mass mass, double beta, std::size_t sites);
/// Spectral mass dropped by truncation: sum_{n > n_max} 2 / (m (2 pi n / beta)^2 + 1).
double truncation_tail(Mass mass, double beta, int n_max);

}  // namespace loopgibbs
