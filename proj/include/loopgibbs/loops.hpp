#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "loopgibbs/lattice.hpp"

namespace loopgibbs {

enum class ModeParity { constant, cosine, sine };

/// Truncated real Fourier basis of L^2([0, beta]):
///   e_0 = 1/sqrt(beta),  e_{+n} = sqrt(2/beta) cos(2 pi n tau / beta),
///   e_{-n} = sqrt(2/beta) sin(2 pi n tau / beta),  1 <= n <= n_max.
/// Mode index 0 is the constant mode, 2n-1 is cos n, 2n is sin n.
class ModeBasis {
public:
    ModeBasis(double beta, int n_max);

    double beta() const { return beta_; }
    int n_max() const { return n_max_; }
    std::size_t mode_count() const { return static_cast<std::size_t>(2 * n_max_ + 1); }

    /// Harmonic number n >= 0 of a mode index.
    int harmonic(std::size_t mode) const { return static_cast<int>((mode + 1) / 2); }
    ModeParity parity(std::size_t mode) const;
    /// Signed frequency q: +2 pi n / beta for cosines, -2 pi n / beta for sines.
    double frequency(std::size_t mode) const;
    std::size_t mode_index(int n, ModeParity parity) const;

    double basis_function(std::size_t mode, double tau) const;

    bool operator==(const ModeBasis&) const = default;

private:
    double beta_;
    int n_max_;
};

/// Precomputed basis values on the uniform grid tau_i = i beta / N.
/// Stored mode-major so the inner loop of a synthesis runs over the grid.
class EvaluationGrid {
public:
    /// Throws std::invalid_argument when grid_size < 4 n_max.
    EvaluationGrid(const ModeBasis& basis, std::size_t grid_size);

    const ModeBasis& basis() const { return basis_; }
    std::size_t size() const { return n_; }
    double spacing() const { return basis_.beta() / static_cast<double>(n_); }
    double tau(std::size_t i) const { return spacing() * static_cast<double>(i); }

    /// out[i] = sum_q coeffs[q] e_q(tau_i). Zero coefficients are skipped.
    void synthesize(std::span<const double> coeffs, std::span<double> out) const;
    std::span<const double> mode_values(std::size_t mode) const
    {
        return {table_.data() + mode * n_, n_};
    }
    /// Trapezoid rule on the periodic grid: (beta/N) sum_i values[i].
    double integrate(std::span<const double> values) const;

private:
    ModeBasis basis_;
    std::size_t n_;
    std::vector<double> table_;
};

/// Smallest grid that integrates U(omega) exactly for an even polynomial U of
/// degree 2 * half_degree, and never below the 4 n_max anti-aliasing floor.
std::size_t default_grid_size(int n_max, int half_degree = 2);

/// A periodic path omega in C_beta stored by its Fourier coefficients.
class TemperatureLoop {
public:
    explicit TemperatureLoop(const ModeBasis& basis);
    TemperatureLoop(const ModeBasis& basis, std::vector<double> coeffs);

    static TemperatureLoop constant(const ModeBasis& basis, double value);
    /// amplitude * cos(2 pi n tau / beta) or the sine analogue.
    static TemperatureLoop harmonic(const ModeBasis& basis, int n, ModeParity parity, double amplitude);

    const ModeBasis& basis() const { return basis_; }
    std::span<const double> coefficients() const { return coeffs_; }
    std::span<double> coefficients() { return coeffs_; }
    double operator[](std::size_t mode) const { return coeffs_[mode]; }
    double& operator[](std::size_t mode) { return coeffs_[mode]; }

    double value_at(double tau) const;

private:
    ModeBasis basis_;
    std::vector<double> coeffs_;
};

/// omega(tau_i) on tau_i = i beta / grid_size. Throws if grid_size < 4 n_max.
std::vector<double> evaluate(const TemperatureLoop& loop, std::size_t grid_size);

/// beta^{-1} int_0^beta omega dtau = c_0 / sqrt(beta).
double time_average(std::span<const double> coeffs, double beta);
double time_average(const TemperatureLoop& loop);

/// L^2([0,beta]) scalar product, exact in coefficient space.
double scalar_product(std::span<const double> a, std::span<const double> b);

/// Sup norm sampled on the evaluation grid.
double sup_norm(const TemperatureLoop& loop, std::size_t grid_size);

/// Real values attached to a finite set of sites (the reduced boundary y).
using ValueField = std::map<Coord, double>;

/// Loops attached to a finite set of sites, e.g. an exterior boundary zeta.
class LoopField {
public:
    explicit LoopField(const ModeBasis& basis) : basis_(basis) {}

    const ModeBasis& basis() const { return basis_; }
    void set(const Coord& site, const TemperatureLoop& loop);
    void set(const Coord& site, std::vector<double> coeffs);
    bool contains(const Coord& site) const { return loops_.count(site) != 0; }
    std::span<const double> at(const Coord& site) const;
    const std::map<Coord, std::vector<double>>& loops() const { return loops_; }

    /// Per-site time averages y_k.
    ValueField reduce() const;
    /// Constant loops y_k.
    static LoopField from_values(const ModeBasis& basis, const ValueField& values);

private:
    ModeBasis basis_;
    std::map<Coord, std::vector<double>> loops_;
};

/// A member zeta of the class Upsilon_beta(y): constant loops y_k plus
/// zero-mean perturbations. Throws if a perturbation has c_0 != 0 or sits
/// on a site not listed in y.
LoopField equivalence_class_member(const ModeBasis& basis, const ValueField& y,
                                   const std::map<Coord, TemperatureLoop>& perturbations);

/// Configuration omega_Lambda of loops on a box; site-major coefficient storage.
class LoopConfiguration {
public:
    LoopConfiguration(const ModeBasis& basis, const LatticeBox& box);

    const ModeBasis& basis() const { return basis_; }
    const LatticeBox& box() const { return box_; }
    std::size_t site_count() const { return box_.size(); }
    std::size_t modes() const { return basis_.mode_count(); }

    std::span<double> site(std::size_t index) { return {coeffs_.data() + index * modes(), modes()}; }
    std::span<const double> site(std::size_t index) const { return {coeffs_.data() + index * modes(), modes()}; }
    TemperatureLoop loop(std::size_t index) const;
    std::span<const double> data() const { return coeffs_; }
    std::span<double> data() { return coeffs_; }

    /// omega_Lambda x 0 on a larger box.
    LoopConfiguration embed(const LatticeBox& larger) const;
    /// (omega_Lambda)_{Lambda'}: restriction to Lambda', zero on Lambda' \ Lambda.
    LoopConfiguration project(const LatticeBox& target) const;

    LoopField to_field() const;

    bool operator==(const LoopConfiguration&) const = default;

private:
    ModeBasis basis_;
    LatticeBox box_;
    std::vector<double> coeffs_;
};

/// Constant loops omega_k = x_k: c_0 = x_k sqrt(beta), all other modes zero.
LoopConfiguration constant_embed(std::span<const double> x, const ModeBasis& basis, const LatticeBox& box);
std::vector<double> time_averages(const LoopConfiguration& config);

/// CSV checkpoint dump: "site,mode,coefficient" rows after a header.
void write_csv(std::ostream& os, const LoopConfiguration& config);
/// Reads a dump written by write_csv into a configuration of the given shape.
LoopConfiguration read_csv(std::istream& is, const ModeBasis& basis, const LatticeBox& box);

}  // namespace loopgibbs
