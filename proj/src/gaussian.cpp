#include "loopgibbs/gaussian.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace loopgibbs {

Mass::Mass(double value) : value_(value)
{
    if (!(value > 0.0)) throw std::invalid_argument("mass must be positive");
}

std::string Mass::str() const
{
    if (is_infinite()) return "inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value_);
    return std::string(buf, res.ptr);
}

Mass Mass::parse(const std::string& text)
{
    if (text == "inf" || text == "infinity" || text == "+inf") return infinity();
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw std::invalid_argument("cannot parse mass '" + text + "'");
    return Mass(v);
}

// ---------------------------------------------------------------------------

double CovarianceSpectrum::eigenvalue_at(double q, Mass mass)
{
    if (q == 0.0) return 1.0;
    if (mass.is_infinite()) return 0.0;
    return 1.0 / (mass.value() * q * q + 1.0);
}

CovarianceSpectrum::CovarianceSpectrum(const ModeBasis& basis, Mass mass) : basis_(basis), mass_(mass)
{
    lambda_.resize(basis.mode_count());
    for (std::size_t q = 0; q < lambda_.size(); ++q) lambda_[q] = eigenvalue_at(basis.frequency(q), mass);
}

// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t h = splitmix64(root);
    for (std::uint64_t i : path) h = splitmix64(h ^ splitmix64(i));
    return h;
}

// ---------------------------------------------------------------------------

GaussianSampler::GaussianSampler(const CovarianceSpectrum& spectrum, std::uint64_t seed)
    : spectrum_(spectrum), rng_(seed)
{
    for (double l : spectrum_.eigenvalues()) std_dev_.push_back(std::sqrt(l));
}

void GaussianSampler::sample_into(std::span<double> out)
{
    if (out.size() != std_dev_.size()) throw std::invalid_argument("sample_into: size mismatch");
    for (std::size_t q = 0; q < out.size(); ++q)
        out[q] = std_dev_[q] > 0.0 ? std_dev_[q] * normal_(rng_) : 0.0;
}

TemperatureLoop GaussianSampler::sample_loop()
{
    TemperatureLoop loop(spectrum_.basis());
    sample_into(loop.coefficients());
    return loop;
}

ClassicalSiteSampler::ClassicalSiteSampler(double beta, std::uint64_t seed)
    : beta_(beta), std_dev_(1.0 / std::sqrt(beta)), rng_(seed)
{
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
}

double ClassicalSiteSampler::operator()() { return std_dev_ * normal_(rng_); }

double characteristic_function(const CovarianceSpectrum& spectrum, std::span<const double> phi)
{
    if (phi.size() != spectrum.eigenvalues().size()) throw std::invalid_argument("phi is not in the spectrum's basis");
    double quad = 0.0;
    for (std::size_t q = 0; q < phi.size(); ++q) quad += spectrum.eigenvalue(q) * phi[q] * phi[q];
    return std::exp(-0.5 * quad);
}

// ---------------------------------------------------------------------------

namespace {

// x coth(x) - 1 without cancellation for small x.
double x_coth_x_minus_one(double x)
{
    if (x < 0.1) {
        const double x2 = x * x;
        // x^2/3 - x^4/45 + 2x^6/945 - x^8/4725 + 2x^10/93555
        return x2 * (1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0 + x2 * (2.0 / 93555.0)))));
    }
    return x / std::tanh(x) - 1.0;
}

}  // namespace

double trace_distance(Mass mass, double beta, std::size_t sites, TraceSum how, long long n_max)
{
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (mass.is_infinite()) return 0.0;
    const double m = mass.value();
    const double n_sites = static_cast<double>(sites);
    if (how == TraceSum::exact) return n_sites * x_coth_x_minus_one(beta / (2.0 * std::sqrt(m)));

    if (n_max < 0) throw std::invalid_argument("n_max must be nonnegative");
    const double a = m * std::pow(2.0 * std::numbers::pi / beta, 2);
    // Smallest terms first keeps the rounding error at the level of the last term.
    double sum = 0.0;
    for (long long n = n_max; n >= 1; --n) {
        const double nn = static_cast<double>(n);
        sum += 2.0 / (a * nn * nn + 1.0);
    }
    if (how == TraceSum::partial_tailed) {
        // int_{N+1/2}^inf 2/(a t^2 + 1) dt; midpoint rule error is O(N^-4).
        const double ra = std::sqrt(a);
        sum += 2.0 / ra * std::atan(1.0 / (ra * (static_cast<double>(n_max) + 0.5)));
    }
    return n_sites * sum;
}

double trace_distance_bound(Mass mass, double beta, std::size_t sites)
{
    if (mass.is_infinite()) return 0.0;
    return static_cast<double>(sites) * beta * beta / (12.0 * mass.value());
}

double truncation_tail(Mass mass, double beta, int n_max)
{
    if (mass.is_infinite()) return 0.0;
    const double tail = trace_distance(mass, beta, 1, TraceSum::exact) - trace_distance(mass, beta, 1, TraceSum::partial, n_max);
    return tail > 0.0 ? tail : 0.0;
}

}  // namespace loopgibbs
