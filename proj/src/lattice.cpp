#include "loopgibbs/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace loopgibbs {

int squared_norm(const Coord& offset)
{
    int s = 0;
    for (int v : offset) s += v * v;
    return s;
}

int squared_distance(const Coord& a, const Coord& b)
{
    if (a.size() != b.size()) throw std::invalid_argument("coordinate dimension mismatch");
    int s = 0;
    for (std::size_t l = 0; l < a.size(); ++l) {
        const int d = a[l] - b[l];
        s += d * d;
    }
    return s;
}

std::string format_coord(const Coord& c)
{
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << c[i];
    os << ')';
    return os.str();
}

// ---------------------------------------------------------------------------
// LatticeBox

LatticeBox::LatticeBox(Coord lower, Coord upper) : lower_(std::move(lower)), upper_(std::move(upper))
{
    if (lower_.empty() || lower_.size() != upper_.size())
        throw std::invalid_argument("box bounds must be nonempty and of equal dimension");
    size_ = 1;
    for (std::size_t l = 0; l < lower_.size(); ++l) {
        if (upper_[l] < lower_[l]) throw std::invalid_argument("box upper bound below lower bound");
        size_ *= static_cast<std::size_t>(upper_[l] - lower_[l] + 1);
    }
}

LatticeBox LatticeBox::from_extents(const std::vector<int>& extents)
{
    Coord lo(extents.size(), 0), hi(extents.size());
    for (std::size_t l = 0; l < extents.size(); ++l) {
        if (extents[l] < 1) throw std::invalid_argument("box extent must be positive");
        hi[l] = extents[l] - 1;
    }
    return LatticeBox(lo, hi);
}

LatticeBox LatticeBox::single(const Coord& site) { return LatticeBox(site, site); }

bool LatticeBox::contains(const Coord& site) const
{
    if (site.size() != lower_.size()) return false;
    for (std::size_t l = 0; l < site.size(); ++l)
        if (site[l] < lower_[l] || site[l] > upper_[l]) return false;
    return true;
}

bool LatticeBox::contains(const LatticeBox& other) const
{
    return contains(other.lower_) && contains(other.upper_);
}

Coord LatticeBox::coord(std::size_t index) const
{
    if (index >= size_) throw std::out_of_range("site index outside box");
    Coord c(lower_.size());
    for (int l = dimension() - 1; l >= 0; --l) {
        const auto ext = static_cast<std::size_t>(extent(l));
        c[l] = lower_[l] + static_cast<int>(index % ext);
        index /= ext;
    }
    return c;
}

std::optional<std::size_t> LatticeBox::find(const Coord& site) const
{
    if (!contains(site)) return std::nullopt;
    std::size_t idx = 0;
    for (int l = 0; l < dimension(); ++l)
        idx = idx * static_cast<std::size_t>(extent(l)) + static_cast<std::size_t>(site[l] - lower_[l]);
    return idx;
}

std::size_t LatticeBox::index(const Coord& site) const
{
    auto idx = find(site);
    if (!idx) throw std::out_of_range("site " + format_coord(site) + " outside box");
    return *idx;
}

Coord LatticeBox::wrap_shift(const Coord& site, const Coord& shift) const
{
    if (!contains(site) || shift.size() != site.size()) throw std::out_of_range("site outside box");
    Coord out(site.size());
    for (int l = 0; l < dimension(); ++l) {
        const int ext = extent(l);
        int r = (site[l] - lower_[l] + shift[l]) % ext;
        if (r < 0) r += ext;
        out[l] = lower_[l] + r;
    }
    return out;
}

// ---------------------------------------------------------------------------
// CouplingSpec

CouplingSpec::CouplingSpec(std::map<int, double> by_squared_distance)
{
    for (const auto& [rho2, value] : by_squared_distance) {
        if (rho2 < 0) throw std::invalid_argument("negative squared distance in coupling table");
        if (!std::isfinite(value)) throw std::invalid_argument("non-finite coupling value");
        if (rho2 == 0) {
            if (value != 0.0)
                throw std::invalid_argument("self-coupling J(0) must be zero; absorb it into the quadratic coefficient a");
            continue;
        }
        if (value == 0.0) continue;
        table_[rho2] = value;
        squared_range_ = std::max(squared_range_, rho2);
    }
}

CouplingSpec CouplingSpec::zero() { return CouplingSpec{}; }

CouplingSpec CouplingSpec::nearest_neighbor(double j0) { return CouplingSpec(std::map<int, double>{{1, j0}}); }

double CouplingSpec::at_squared_distance(int rho2) const
{
    auto it = table_.find(rho2);
    return it == table_.end() ? 0.0 : it->second;
}

double CouplingSpec::range() const { return std::sqrt(static_cast<double>(squared_range_)); }

namespace {

// Squared norms realised by integer vectors of the given dimension, up to `max_rho2`.
std::vector<int> lattice_shells(int dimension, int max_rho2)
{
    std::vector<int> shells;
    const int radius = static_cast<int>(std::floor(std::sqrt(static_cast<double>(max_rho2)))) + 1;
    Coord v(dimension, -radius);
    while (true) {
        const int n2 = squared_norm(v);
        if (n2 > 0 && n2 <= max_rho2) shells.push_back(n2);
        int l = 0;
        while (l < dimension && ++v[l] > radius) v[l++] = -radius;
        if (l == dimension) break;
    }
    std::sort(shells.begin(), shells.end());
    shells.erase(std::unique(shells.begin(), shells.end()), shells.end());
    return shells;
}

}  // namespace

bool CouplingSpec::is_nonnegative_nonincreasing(int dimension) const
{
    double prev = std::numeric_limits<double>::infinity();
    for (int rho2 : lattice_shells(dimension, squared_range_)) {
        const double v = at_squared_distance(rho2);
        if (v < 0.0 || v > prev) return false;
        prev = v;
    }
    return true;
}

double coupling_norm(const CouplingSpec& spec, int dimension)
{
    if (dimension < 1) throw std::invalid_argument("dimension must be positive");
    if (spec.is_zero()) return 0.0;
    const int radius = static_cast<int>(std::floor(std::sqrt(static_cast<double>(spec.squared_range()))));
    double total = 0.0;
    Coord v(dimension, -radius);
    while (true) {
        const int n2 = squared_norm(v);
        if (n2 > 0) total += std::abs(spec.at_squared_distance(n2));
        int l = 0;
        while (l < dimension && ++v[l] > radius) v[l++] = -radius;
        if (l == dimension) break;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Potentials

double Polynomial::operator()(double x) const
{
    const double x2 = x * x;
    // Horner in t = x^2 over a t + b_2 t^2 + ... + b_p t^p.
    double acc = 0.0;
    for (auto it = b.rbegin(); it != b.rend(); ++it) acc = (acc + *it) * x2;
    return (acc + a) * x2;
}

int Polynomial::degree_half() const
{
    for (int l = static_cast<int>(b.size()) - 1; l >= 0; --l)
        if (b[l] != 0.0) return l + 2;
    return a != 0.0 ? 1 : 0;
}

double Polynomial::leading_coefficient() const
{
    const int p = degree_half();
    if (p == 0) return 0.0;
    return p == 1 ? a : b[p - 2];
}

bool is_phi4_form(const Polynomial& poly)
{
    if (poly.b.empty()) return false;
    const int p = poly.degree_half();
    if (p < 2) return false;
    for (double bl : poly.b)
        if (bl < 0.0) return false;
    return poly.b[p - 2] > 0.0;
}

PotentialSpec::PotentialSpec(Polynomial base, bool phi4_family) : base_(std::move(base)), phi4_(phi4_family)
{
    if (phi4_ && !is_phi4_form(base_))
        throw std::invalid_argument("potential does not satisfy the Phi4 family constraints (b_p > 0, b_l >= 0)");
}

void PotentialSpec::set_override(const Coord& site, Polynomial poly)
{
    if (phi4_ && !is_phi4_form(poly))
        throw std::invalid_argument("override at " + format_coord(site) + " violates the Phi4 family constraints");
    overrides_[site] = std::move(poly);
}

const Polynomial& PotentialSpec::at(const Coord& site) const
{
    auto it = overrides_.find(site);
    return it == overrides_.end() ? base_ : it->second;
}

bool PotentialSpec::satisfies_phi4_form() const
{
    if (!is_phi4_form(base_)) return false;
    for (const auto& [site, poly] : overrides_)
        if (!is_phi4_form(poly)) return false;
    return true;
}

namespace {

// inf_{x} (U(x) - c~/2 x^2) for super-quadratic U, via t = x^2 >= 0.
double lower_bound_offset(const Polynomial& poly, double c_tilde)
{
    Polynomial shifted = poly;
    shifted.a -= 0.5 * c_tilde;
    const double lead = shifted.leading_coefficient();
    // Beyond t_max the leading power dominates the rest: Cauchy-type bound.
    double sum_abs = std::abs(shifted.a);
    for (double bl : shifted.b) sum_abs += std::abs(bl);
    const double t_max = 1.0 + sum_abs / lead;
    auto g = [&](double t) { return shifted(std::sqrt(t)); };
    const int n = 4000;
    double best_t = 0.0, best = g(0.0);
    for (int i = 1; i <= n; ++i) {
        const double t = t_max * i / n;
        const double v = g(t);
        if (v < best) { best = v; best_t = t; }
    }
    // Golden-section refinement around the best grid point.
    double lo = std::max(0.0, best_t - t_max / n), hi = std::min(t_max, best_t + t_max / n);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
        const double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
        if (g(x1) < g(x2)) hi = x2; else lo = x1;
    }
    best = std::min(best, g(0.5 * (lo + hi)));
    // Safety margin so the witness is a true lower bound despite rounding.
    return best - 1e-9 * (1.0 + std::abs(best));
}

}  // namespace

StabilityReport validate_stability(const Polynomial& poly, double c)
{
    StabilityReport r;
    const double threshold = std::max(c - 1.0, 0.0);
    const int p = poly.degree_half();
    const double lead = poly.leading_coefficient();
    std::ostringstream msg;
    if (p >= 2 && lead > 0.0) {
        r.stable = r.integrable = true;
        r.c_tilde_sup = std::numeric_limits<double>::infinity();
        r.witness_c_tilde = threshold + 1.0;
        r.witness_b = lower_bound_offset(poly, r.witness_c_tilde);
        msg << "x^" << 2 * p << " growth dominates; witness c~=" << r.witness_c_tilde << ", b=" << r.witness_b;
    } else if (p >= 2) {
        msg << "leading coefficient of x^" << 2 * p << " is negative: U is unbounded below";
    } else {
        // U(x) = a x^2 (possibly a == 0): admissible c~ are exactly c~ <= 2a with b = 0.
        r.c_tilde_sup = 2.0 * poly.a;
        r.stable = r.c_tilde_sup > threshold;
        r.integrable = r.c_tilde_sup > c - 1.0;
        if (r.stable) {
            r.witness_c_tilde = r.c_tilde_sup;
            r.witness_b = 0.0;
            msg << "quadratic potential; witness c~ up to " << r.c_tilde_sup;
        } else {
            msg << "quadratic potential with 2a=" << r.c_tilde_sup << " <= max{c-1,0}=" << threshold;
        }
    }
    r.message = msg.str();
    return r;
}

StabilityReport validate_stability(const PotentialSpec& pot, double c)
{
    StabilityReport out = validate_stability(pot.base(), c);
    for (const auto& [site, poly] : pot.overrides()) {
        StabilityReport r = validate_stability(poly, c);
        const bool stable = out.stable && r.stable;
        const bool integrable = out.integrable && r.integrable;
        if ((out.stable && !r.stable) || (out.integrable && !r.integrable)) {
            r.message = "site " + format_coord(site) + ": " + r.message;
            out = r;
        }
        out.stable = stable;
        out.integrable = integrable;
    }
    return out;
}

// ---------------------------------------------------------------------------

int periodic_squared_distance(const Coord& j, const Coord& k, const LatticeBox& box)
{
    if (!box.contains(j) || !box.contains(k)) throw std::out_of_range("site outside box");
    int s = 0;
    for (int l = 0; l < box.dimension(); ++l) {
        const int d = std::abs(j[l] - k[l]);
        const int w = std::min(d, box.extent(l) - d);
        s += w * w;
    }
    return s;
}

double periodic_distance(const Coord& j, const Coord& k, const LatticeBox& box)
{
    return std::sqrt(static_cast<double>(periodic_squared_distance(j, k, box)));
}

}  // namespace loopgibbs
