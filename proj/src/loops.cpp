#include "loopgibbs/loops.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace loopgibbs {

ModeBasis::ModeBasis(double beta, int n_max) : beta_(beta), n_max_(n_max)
{
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive and finite");
    if (n_max < 1) throw std::invalid_argument("mode cutoff n_max must be positive");
}

ModeParity ModeBasis::parity(std::size_t mode) const
{
    if (mode >= mode_count()) throw std::out_of_range("mode index outside basis");
    if (mode == 0) return ModeParity::constant;
    return (mode % 2 == 1) ? ModeParity::cosine : ModeParity::sine;
}

double ModeBasis::frequency(std::size_t mode) const
{
    const double q = 2.0 * std::numbers::pi * harmonic(mode) / beta_;
    return parity(mode) == ModeParity::sine ? -q : q;
}

std::size_t ModeBasis::mode_index(int n, ModeParity parity) const
{
    if (n < 0 || n > n_max_) throw std::out_of_range("harmonic outside basis");
    if (n == 0) {
        if (parity != ModeParity::constant) throw std::invalid_argument("harmonic 0 is the constant mode");
        return 0;
    }
    if (parity == ModeParity::constant) throw std::invalid_argument("constant parity requires harmonic 0");
    return static_cast<std::size_t>(parity == ModeParity::cosine ? 2 * n - 1 : 2 * n);
}

double ModeBasis::basis_function(std::size_t mode, double tau) const
{
    switch (parity(mode)) {
    case ModeParity::constant:
        return 1.0 / std::sqrt(beta_);
    case ModeParity::cosine:
        return std::sqrt(2.0 / beta_) * std::cos(frequency(mode) * tau);
    case ModeParity::sine:
        break;
    }
    return std::sqrt(2.0 / beta_) * std::sin(frequency(mode) * tau);
}

// ---------------------------------------------------------------------------

std::size_t default_grid_size(int n_max, int half_degree)
{
    const auto n = static_cast<std::size_t>(n_max);
    const auto p = static_cast<std::size_t>(std::max(half_degree, 1));
    return std::max(4 * n, 2 * p * n + 1);
}

EvaluationGrid::EvaluationGrid(const ModeBasis& basis, std::size_t grid_size) : basis_(basis), n_(grid_size)
{
    if (grid_size < 4 * static_cast<std::size_t>(basis.n_max()))
        throw std::invalid_argument("evaluation grid of " + std::to_string(grid_size) +
                                    " points is too coarse for n_max=" + std::to_string(basis.n_max()));
    const std::size_t modes = basis.mode_count();
    table_.resize(modes * n_);
    const double norm = std::sqrt(2.0 / basis.beta());
    for (std::size_t i = 0; i < n_; ++i) table_[i] = 1.0 / std::sqrt(basis.beta());
    for (int n = 1; n <= basis.n_max(); ++n) {
        double* c = table_.data() + (2 * n - 1) * n_;
        double* s = table_.data() + (2 * n) * n_;
        for (std::size_t i = 0; i < n_; ++i) {
            // Reduce the phase exactly in integers before the trig call.
            const auto k = (static_cast<std::size_t>(n) * i) % n_;
            const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_);
            c[i] = norm * std::cos(phase);
            s[i] = norm * std::sin(phase);
        }
    }
}

void EvaluationGrid::synthesize(std::span<const double> coeffs, std::span<double> out) const
{
    if (coeffs.size() != basis_.mode_count() || out.size() != n_)
        throw std::invalid_argument("synthesize: size mismatch");
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t q = 0; q < coeffs.size(); ++q) {
        const double c = coeffs[q];
        if (c == 0.0) continue;
        const double* row = table_.data() + q * n_;
        for (std::size_t i = 0; i < n_; ++i) out[i] += c * row[i];
    }
}

double EvaluationGrid::integrate(std::span<const double> values) const
{
    double s = 0.0;
    for (double v : values) s += v;
    return s * spacing();
}

// ---------------------------------------------------------------------------

TemperatureLoop::TemperatureLoop(const ModeBasis& basis) : basis_(basis), coeffs_(basis.mode_count(), 0.0) {}

TemperatureLoop::TemperatureLoop(const ModeBasis& basis, std::vector<double> coeffs)
    : basis_(basis), coeffs_(std::move(coeffs))
{
    if (coeffs_.size() != basis_.mode_count()) throw std::invalid_argument("coefficient count does not match basis");
}

TemperatureLoop TemperatureLoop::constant(const ModeBasis& basis, double value)
{
    TemperatureLoop loop(basis);
    loop.coeffs_[0] = value * std::sqrt(basis.beta());
    return loop;
}

TemperatureLoop TemperatureLoop::harmonic(const ModeBasis& basis, int n, ModeParity parity, double amplitude)
{
    TemperatureLoop loop(basis);
    const std::size_t mode = basis.mode_index(n, parity);
    // amplitude * cos(q tau) = amplitude * sqrt(beta/2) * e_q(tau) for n >= 1.
    loop.coeffs_[mode] = (n == 0) ? amplitude * std::sqrt(basis.beta()) : amplitude * std::sqrt(basis.beta() / 2.0);
    return loop;
}

double TemperatureLoop::value_at(double tau) const
{
    double v = 0.0;
    for (std::size_t q = 0; q < coeffs_.size(); ++q)
        if (coeffs_[q] != 0.0) v += coeffs_[q] * basis_.basis_function(q, tau);
    return v;
}

std::vector<double> evaluate(const TemperatureLoop& loop, std::size_t grid_size)
{
    EvaluationGrid grid(loop.basis(), grid_size);
    std::vector<double> out(grid_size);
    grid.synthesize(loop.coefficients(), out);
    return out;
}

double time_average(std::span<const double> coeffs, double beta) { return coeffs[0] / std::sqrt(beta); }

double time_average(const TemperatureLoop& loop) { return time_average(loop.coefficients(), loop.basis().beta()); }

double scalar_product(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw std::invalid_argument("scalar product of loops in different bases");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sup_norm(const TemperatureLoop& loop, std::size_t grid_size)
{
    const auto values = evaluate(loop, grid_size);
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

// ---------------------------------------------------------------------------

void LoopField::set(const Coord& site, const TemperatureLoop& loop)
{
    if (!(loop.basis() == basis_)) throw std::invalid_argument("loop basis differs from field basis");
    loops_[site].assign(loop.coefficients().begin(), loop.coefficients().end());
}

void LoopField::set(const Coord& site, std::vector<double> coeffs)
{
    if (coeffs.size() != basis_.mode_count()) throw std::invalid_argument("coefficient count does not match basis");
    loops_[site] = std::move(coeffs);
}

std::span<const double> LoopField::at(const Coord& site) const
{
    auto it = loops_.find(site);
    if (it == loops_.end()) throw std::out_of_range("no loop at site " + format_coord(site));
    return it->second;
}

ValueField LoopField::reduce() const
{
    ValueField y;
    for (const auto& [site, c] : loops_) y[site] = time_average(c, basis_.beta());
    return y;
}

LoopField LoopField::from_values(const ModeBasis& basis, const ValueField& values)
{
    LoopField f(basis);
    for (const auto& [site, v] : values) f.set(site, TemperatureLoop::constant(basis, v));
    return f;
}

LoopField equivalence_class_member(const ModeBasis& basis, const ValueField& y,
                                   const std::map<Coord, TemperatureLoop>& perturbations)
{
    LoopField zeta = LoopField::from_values(basis, y);
    for (const auto& [site, p] : perturbations) {
        if (p[0] != 0.0)
            throw std::invalid_argument("perturbation at " + format_coord(site) + " has a nonzero constant mode");
        if (!zeta.contains(site))
            throw std::invalid_argument("perturbation at " + format_coord(site) + " has no class value y");
        std::vector<double> c(zeta.at(site).begin(), zeta.at(site).end());
        for (std::size_t q = 1; q < c.size(); ++q) c[q] += p[q];
        zeta.set(site, std::move(c));
    }
    return zeta;
}

// ---------------------------------------------------------------------------

LoopConfiguration::LoopConfiguration(const ModeBasis& basis, const LatticeBox& box)
    : basis_(basis), box_(box), coeffs_(box.size() * basis.mode_count(), 0.0)
{
}

TemperatureLoop LoopConfiguration::loop(std::size_t index) const
{
    auto s = site(index);
    return TemperatureLoop(basis_, std::vector<double>(s.begin(), s.end()));
}

LoopConfiguration LoopConfiguration::embed(const LatticeBox& larger) const
{
    if (!larger.contains(box_)) throw std::invalid_argument("embedding target does not contain the box");
    LoopConfiguration out(basis_, larger);
    for (std::size_t i = 0; i < site_count(); ++i) {
        auto src = site(i);
        std::copy(src.begin(), src.end(), out.site(larger.index(box_.coord(i))).begin());
    }
    return out;
}

LoopConfiguration LoopConfiguration::project(const LatticeBox& target) const
{
    LoopConfiguration out(basis_, target);
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (auto src = box_.find(target.coord(i))) {
            auto s = site(*src);
            std::copy(s.begin(), s.end(), out.site(i).begin());
        }
    }
    return out;
}

LoopField LoopConfiguration::to_field() const
{
    LoopField f(basis_);
    for (std::size_t i = 0; i < site_count(); ++i) f.set(box_.coord(i), loop(i));
    return f;
}

LoopConfiguration constant_embed(std::span<const double> x, const ModeBasis& basis, const LatticeBox& box)
{
    if (x.size() != box.size()) throw std::invalid_argument("constant_embed: one value per site required");
    LoopConfiguration config(basis, box);
    const double root_beta = std::sqrt(basis.beta());
    for (std::size_t i = 0; i < x.size(); ++i) config.site(i)[0] = x[i] * root_beta;
    return config;
}

std::vector<double> time_averages(const LoopConfiguration& config)
{
    std::vector<double> out(config.site_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = time_average(config.site(i), config.basis().beta());
    return out;
}

void write_csv(std::ostream& os, const LoopConfiguration& config)
{
    os << "site,mode,coefficient\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < config.site_count(); ++i) {
        auto s = config.site(i);
        for (std::size_t q = 0; q < s.size(); ++q) os << i << ',' << q << ',' << s[q] << '\n';
    }
}

LoopConfiguration read_csv(std::istream& is, const ModeBasis& basis, const LatticeBox& box)
{
    LoopConfiguration config(basis, box);
    std::string line;
    if (!std::getline(is, line) || line != "site,mode,coefficient")
        throw std::runtime_error("loop dump: missing header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::size_t site = 0, mode = 0;
        double value = 0.0;
        char c1 = 0, c2 = 0;
        if (!(row >> site >> c1 >> mode >> c2 >> value) || c1 != ',' || c2 != ',')
            throw std::runtime_error("loop dump: malformed row '" + line + "'");
        if (site >= config.site_count() || mode >= config.modes())
            throw std::runtime_error("loop dump: index out of range in row '" + line + "'");
        config.site(site)[mode] = value;
    }
    return config;
}

}  // namespace loopgibbs
