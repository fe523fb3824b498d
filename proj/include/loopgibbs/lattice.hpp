#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace loopgibbs {

/// Integer lattice coordinate in Z^d.
using Coord = std::vector<int>;

int squared_norm(const Coord& offset);
int squared_distance(const Coord& a, const Coord& b);

/// Rectangular box {k : lower_l <= k_l <= upper_l} in Z^d with a
/// row-major site numbering (last axis fastest).
class LatticeBox {
public:
    LatticeBox(Coord lower, Coord upper);

    /// Box {0..extent_l-1} along every axis.
    static LatticeBox from_extents(const std::vector<int>& extents);
    /// Single-site box.
    static LatticeBox single(const Coord& site);

    int dimension() const { return static_cast<int>(lower_.size()); }
    std::size_t size() const { return size_; }
    const Coord& lower() const { return lower_; }
    const Coord& upper() const { return upper_; }
    int extent(int axis) const { return upper_[axis] - lower_[axis] + 1; }

    bool contains(const Coord& site) const;
    bool contains(const LatticeBox& other) const;

    Coord coord(std::size_t index) const;
    /// Throws std::out_of_range for sites outside the box.
    std::size_t index(const Coord& site) const;
    std::optional<std::size_t> find(const Coord& site) const;

    /// Cyclic translation by `shift` inside the box (torus wrap).
    Coord wrap_shift(const Coord& site, const Coord& shift) const;

    bool operator==(const LatticeBox& other) const = default;

private:
    Coord lower_;
    Coord upper_;
    std::size_t size_ = 0;
};

enum class BoundaryMode { free, periodic };

/// Finite-range radial coupling J(|j-k|). Values are keyed by exact squared
/// integer distance so shell lookups never depend on floating-point rounding.
/// Squared distances absent from the table carry J = 0. J(0) is always 0.
class CouplingSpec {
public:
    CouplingSpec() = default;
    explicit CouplingSpec(std::map<int, double> by_squared_distance);

    static CouplingSpec zero();
    static CouplingSpec nearest_neighbor(double j0);

    double at_squared_distance(int rho2) const;
    /// Largest squared distance with a nonzero value (0 for J == 0).
    int squared_range() const { return squared_range_; }
    double range() const;
    bool is_zero() const { return squared_range_ == 0; }
    const std::map<int, double>& table() const { return table_; }

    /// J >= 0 everywhere and nonincreasing in the distance over every lattice
    /// shell of Z^d up to the range (unlisted shells count as zero).
    bool is_nonnegative_nonincreasing(int dimension) const;

private:
    std::map<int, double> table_;
    int squared_range_ = 0;
};

/// Even polynomial U(x) = a x^2 + sum_{l>=2} b_l x^{2l}.
struct Polynomial {
    double a = 0.0;
    /// b[0] multiplies x^4, b[1] multiplies x^6, ...
    std::vector<double> b;

    double operator()(double x) const;
    /// Index l of the highest nonzero power x^{2l}; 0 if U == 0.
    int degree_half() const;
    double leading_coefficient() const;
    bool operator==(const Polynomial&) const = default;
};

class PotentialSpec {
public:
    PotentialSpec() = default;
    explicit PotentialSpec(Polynomial base, bool phi4_family = false);

    /// Throws std::invalid_argument if the override breaks the family constraint.
    void set_override(const Coord& site, Polynomial poly);

    const Polynomial& base() const { return base_; }
    const Polynomial& at(const Coord& site) const;
    bool has_overrides() const { return !overrides_.empty(); }
    const std::map<Coord, Polynomial>& overrides() const { return overrides_; }
    bool phi4_family() const { return phi4_; }
    /// True iff every polynomial has the form a x^2 + sum b_l x^{2l}, b_p > 0, b_l >= 0.
    bool satisfies_phi4_form() const;

private:
    Polynomial base_;
    std::map<Coord, Polynomial> overrides_;
    bool phi4_ = false;
};

bool is_phi4_form(const Polynomial& poly);

/// sup_j sum_k |J_jk| on the infinite lattice Z^d.
double coupling_norm(const CouplingSpec& spec, int dimension);

struct StabilityReport {
    /// U(x) >= c~/2 x^2 + b with c~ > max{c-1, 0}.
    bool stable = false;
    /// The weaker bound c~ > c - 1, which is what integrability of exp(-E)
    /// against the Gaussian reference measure actually needs.
    bool integrable = false;
    /// Supremum of admissible c~ (infinity when the growth is super-quadratic).
    double c_tilde_sup = 0.0;
    /// A concrete witness pair (c~, b) when stable.
    double witness_c_tilde = 0.0;
    double witness_b = 0.0;
    std::string message;
};

StabilityReport validate_stability(const Polynomial& poly, double c);
StabilityReport validate_stability(const PotentialSpec& pot, double c);

/// Torus distance: per axis min{|j_l-k_l|, L_l - |j_l-k_l|}.
int periodic_squared_distance(const Coord& j, const Coord& k, const LatticeBox& box);
double periodic_distance(const Coord& j, const Coord& k, const LatticeBox& box);

std::string format_coord(const Coord& c);

}  // namespace loopgibbs
