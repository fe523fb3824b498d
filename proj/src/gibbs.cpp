#include "loopgibbs/gibbs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace loopgibbs {

namespace {

constexpr char kMagic[4] = {'L', 'G', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr double kMinStep = 1e-4;
constexpr double kMaxStep = 0.999;
constexpr std::size_t kTuneWindow = 50;

template <class T>
void put(std::ostream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is)
{
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("truncated checkpoint");
    return v;
}

template <class T>
void put_vector(std::ostream& os, const std::vector<T>& v)
{
    put<std::uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
std::vector<T> get_vector(std::istream& is)
{
    const auto n = get<std::uint64_t>(is);
    if (n > (std::uint64_t{1} << 32)) throw std::runtime_error("corrupt checkpoint");
    std::vector<T> v(n);
    if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T))))
        throw std::runtime_error("truncated checkpoint");
    return v;
}

void put_string(std::ostream& os, const std::string& s)
{
    put<std::uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is)
{
    const auto n = get<std::uint64_t>(is);
    if (n > (std::uint64_t{1} << 24)) throw std::runtime_error("corrupt checkpoint");
    std::string s(n, '\0');
    if (!is.read(s.data(), static_cast<std::streamsize>(n))) throw std::runtime_error("truncated checkpoint");
    return s;
}

void add_flag(std::vector<std::string>& flags, const std::string& f)
{
    if (std::find(flags.begin(), flags.end(), f) == flags.end()) flags.push_back(f);
}

}  // namespace

std::vector<double> prior_draw(const GibbsTarget& target, Rng& rng)
{
    std::normal_distribution<double> normal;
    const auto sd = target.prior_std();
    const std::size_t d = target.site_dim();
    std::vector<double> x(target.state_size(), 0.0);
    for (std::size_t j = 0; j < target.sites(); ++j)
        for (std::size_t q = 0; q < d; ++q)
            if (sd[q] > 0.0) x[j * d + q] = sd[q] * normal(rng);
    return x;
}

Chain::Chain(const GibbsTarget& target, ChainParams params, std::uint64_t seed)
    : target_(&target),
      params_(params),
      model_(target.energy_model()),
      state_([&] {
          Rng init(derive_seed(seed, {0}));
          return prior_draw(target, init);
      }()),
      cache_(model_, state_),
      rng_(derive_seed(seed, {1}))
{
    if (params_.thin == 0) throw std::invalid_argument("thin must be at least 1");
    if (!(params_.target_acceptance > 0.0 && params_.target_acceptance < 1.0))
        throw std::invalid_argument("target acceptance must lie in (0, 1)");
    if (!(params_.initial_step > 0.0 && params_.initial_step < 1.0))
        throw std::invalid_argument("initial step must lie in (0, 1)");
    const std::size_t d = target.site_dim();
    prior_std_.assign(target.prior_std().begin(), target.prior_std().end());
    if (params_.move == MoveKind::global) {
        blocks_.push_back({0, 0, target.state_size()});
    } else {
        const bool oscillating = std::any_of(prior_std_.begin() + 1, prior_std_.end(), [](double s) { return s > 0.0; });
        for (std::size_t j = 0; j < target.sites(); ++j) {
            blocks_.push_back({j, 0, 1});
            if (d > 1 && oscillating) blocks_.push_back({j, 1, d - 1});
        }
    }
    steps_.assign(blocks_.size(), params_.initial_step);
    accepted_.assign(blocks_.size(), 0);
    proposed_.assign(blocks_.size(), 0);
    proposal_.resize(params_.move == MoveKind::global ? target.state_size() : d);
    path_.resize(model_.scratch_size());
}

double Chain::acceptance(std::size_t block) const
{
    return proposed_[block] ? static_cast<double>(accepted_[block]) / static_cast<double>(proposed_[block]) : 0.0;
}

double Chain::acceptance() const
{
    std::uint64_t a = 0, p = 0;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        a += accepted_[b];
        p += proposed_[b];
    }
    return p ? static_cast<double>(a) / static_cast<double>(p) : 0.0;
}

void Chain::reset_counts()
{
    std::fill(accepted_.begin(), accepted_.end(), 0);
    std::fill(proposed_.begin(), proposed_.end(), 0);
}

void Chain::set_state(std::span<const double> state)
{
    if (state.size() != state_.size()) throw std::invalid_argument("state size mismatch");
    const std::size_t d = target_->site_dim();
    for (std::size_t i = 0; i < state.size(); ++i)
        if (prior_std_[i % d] == 0.0 && state[i] != 0.0)
            throw std::invalid_argument("state has weight on a coordinate the prior freezes at zero");
    state_.assign(state.begin(), state.end());
    cache_.rebuild(state_);
}

void Chain::site_move(std::size_t b)
{
    const Block& blk = blocks_[b];
    const std::size_t d = target_->site_dim();
    const double s = steps_[b];
    const double rho = std::sqrt(1.0 - s * s);
    std::span<double> current(state_.data() + blk.site * d, d);
    std::copy(current.begin(), current.end(), proposal_.begin());
    for (std::size_t q = blk.first; q < blk.first + blk.count; ++q)
        if (prior_std_[q] > 0.0) proposal_[q] = rho * current[q] + s * prior_std_[q] * normal_(rng_);
    std::span<const double> proposed(proposal_.data(), d);

    double onsite_new;
    if (model_.is_classical()) {
        onsite_new = model_.onsite(blk.site, proposed, {});
    } else if (blk.first == 0 && blk.count == 1) {
        // Zero mode only: the path shifts by a constant.
        const double shift = (proposed[0] - current[0]) / std::sqrt(target_->context().beta());
        auto old_path = cache_.path(blk.site);
        for (std::size_t i = 0; i < path_.size(); ++i) path_[i] = old_path[i] + shift;
        onsite_new = model_.onsite_from_path(blk.site, path_);
    } else {
        model_.grid().synthesize(proposed, path_);
        onsite_new = model_.onsite_from_path(blk.site, path_);
    }
    const double delta = onsite_new - cache_.onsite(blk.site) + cache_.interaction_delta(blk.site, current, proposed);
    ++proposed_[b];
    const double u = uniform_(rng_);
    if (delta <= 0.0 || std::log(u) < -delta) {
        ++accepted_[b];
        cache_.commit(blk.site, current, proposed, path_, onsite_new, delta);
        std::copy(proposed.begin(), proposed.end(), current.begin());
    }
}

void Chain::global_move()
{
    const double s = steps_[0];
    const double rho = std::sqrt(1.0 - s * s);
    const std::size_t d = target_->site_dim();
    for (std::size_t i = 0; i < state_.size(); ++i) {
        const double sd = prior_std_[i % d];
        proposal_[i] = sd > 0.0 ? rho * state_[i] + s * sd * normal_(rng_) : 0.0;
    }
    const double e_new = model_.total(proposal_);
    const double delta = e_new - cache_.total();
    ++proposed_[0];
    const double u = uniform_(rng_);
    if (delta <= 0.0 || std::log(u) < -delta) {
        ++accepted_[0];
        state_ = proposal_;
        cache_.rebuild(state_);
    }
}

void Chain::sweep()
{
    if (params_.move == MoveKind::global)
        global_move();
    else
        for (std::size_t b = 0; b < blocks_.size(); ++b) site_move(b);
    ++sweeps_;
    if (params_.check_interval && sweeps_ % params_.check_interval == 0) check_energy();
}

void Chain::check_energy()
{
    const double before = cache_.total();
    const double drift = cache_.rebuild(state_);
    max_drift_ = std::max(max_drift_, drift);
    if (drift > kEnergyDriftTolerance * std::max(1.0, std::abs(before)))
        throw std::runtime_error("cached energy drifted from the recomputed value by " + std::to_string(drift));
}

void Chain::burn_in()
{
    reset_counts();
    std::vector<std::uint64_t> acc0(blocks_.size(), 0), prop0(blocks_.size(), 0);
    for (std::size_t i = 1; i <= params_.burn_in; ++i) {
        sweep();
        if (i % kTuneWindow != 0) continue;
        // Robbins-Monro on log s with a slowly decaying gain.
        const double gain = 1.0 / std::sqrt(static_cast<double>(i / kTuneWindow));
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            const auto p = proposed_[b] - prop0[b];
            if (p == 0) continue;
            const double rate = static_cast<double>(accepted_[b] - acc0[b]) / static_cast<double>(p);
            steps_[b] = std::clamp(steps_[b] * std::exp(gain * (rate - params_.target_acceptance)), kMinStep, kMaxStep);
            acc0[b] = accepted_[b];
            prop0[b] = proposed_[b];
        }
    }
    tuned_ = true;
    reset_counts();
}

void Chain::save(std::ostream& os) const
{
    os.write(kMagic, 4);
    put(os, kCheckpointVersion);
    put<std::uint64_t>(os, sweeps_);
    put<std::uint8_t>(os, tuned_ ? 1 : 0);
    put(os, max_drift_);
    put_vector(os, state_);
    put_vector(os, steps_);
    put_vector(os, accepted_);
    put_vector(os, proposed_);
    std::ostringstream gen;
    gen << rng_ << ' ' << normal_;
    put_string(os, gen.str());
    if (!os) throw std::runtime_error("failed to write checkpoint");
}

void Chain::load(std::istream& is)
{
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a chain checkpoint");
    const auto version = get<std::uint32_t>(is);
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    const auto sweeps = get<std::uint64_t>(is);
    const bool tuned = get<std::uint8_t>(is) != 0;
    const double drift = get<double>(is);
    auto state = get_vector<double>(is);
    auto steps = get_vector<double>(is);
    auto acc = get_vector<std::uint64_t>(is);
    auto prop = get_vector<std::uint64_t>(is);
    if (steps.size() != steps_.size() || acc.size() != steps_.size() || prop.size() != steps_.size())
        throw std::runtime_error("checkpoint does not match this chain's layout");
    std::istringstream gen(get_string(is));
    Rng rng;
    std::normal_distribution<double> normal;
    if (!(gen >> rng >> normal)) throw std::runtime_error("corrupt generator state in checkpoint");
    set_state(state);
    sweeps_ = sweeps;
    tuned_ = tuned;
    max_drift_ = drift;
    steps_ = std::move(steps);
    accepted_ = std::move(acc);
    proposed_ = std::move(prop);
    rng_ = rng;
    normal_ = normal;
}

void require_sampleable(const GibbsTarget& target)
{
    const auto& ctx = target.context();
    const double c = coupling_norm(ctx.coupling(), ctx.box().dimension());
    const auto report = validate_stability(ctx.potential(), c);
    if (!report.integrable) throw std::invalid_argument("target is not normalizable: " + report.message);
}

ChainReport run_chain(const GibbsTarget& target, const ChainParams& params, std::uint64_t seed,
                      const std::function<void(std::span<const double>)>& on_sample)
{
    require_sampleable(target);
    Chain chain(target, params, seed);
    chain.burn_in();
    ChainReport report;
    for (std::size_t i = 0; i < params.samples; ++i) {
        for (std::size_t t = 0; t < params.thin; ++t) chain.sweep();
        if (on_sample) on_sample(chain.state());
        ++report.recorded;
    }
    chain.check_energy();
    report.sweeps = chain.sweeps();
    report.acceptance = chain.acceptance();
    report.max_energy_drift = chain.max_energy_drift();
    for (std::size_t b = 0; b < chain.block_count(); ++b) {
        const double a = chain.acceptance(b);
        report.min_block_acceptance = std::min(report.min_block_acceptance, a);
        report.max_block_acceptance = std::max(report.max_block_acceptance, a);
    }
    if (params.samples > 0 &&
        (report.min_block_acceptance < kMinAcceptance || report.max_block_acceptance > kMaxAcceptance))
    {
        if (report.min_block_acceptance < kMinAcceptance) report.flags.push_back("acceptance below 0.05 after tuning");
        if (report.max_block_acceptance > kMaxAcceptance)
            report.flags.push_back("acceptance above 0.95 after tuning (step at its cap)");
    }
    return report;
}

std::vector<EstimateWithError> expectations(const GibbsTarget& target, std::span<const Observable> fs,
                                            const McParams& mc)
{
    require_sampleable(target);
    if (mc.chains == 0) throw std::invalid_argument("at least one chain is required");
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::vector<std::vector<double>>> series(fs.size(), std::vector<std::vector<double>>(mc.chains));
    std::vector<ChainReport> reports(mc.chains);
    parallel_for(mc.chains, mc.workers, [&](std::size_t c) {
        for (auto& s : series) s[c].reserve(mc.chain.samples);
        reports[c] = run_chain(target, mc.chain, derive_seed(mc.seed, {c}), [&](std::span<const double> x) {
            const SampleView view = target.view(x);
            for (std::size_t k = 0; k < fs.size(); ++k) series[k][c].push_back(fs[k](view));
        });
    });
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::vector<EstimateWithError> out;
    for (std::size_t k = 0; k < fs.size(); ++k) {
        auto est = batch_means(std::span<const std::vector<double>>(series[k]));
        est.seed = mc.seed;
        est.wall_seconds = wall;
        for (const auto& r : reports)
            for (const auto& f : r.flags) add_flag(est.flags, f);
        out.push_back(std::move(est));
    }
    return out;
}

EstimateWithError expectation(const GibbsTarget& target, const Observable& f, const McParams& mc)
{
    return expectations(target, std::span<const Observable>(&f, 1), mc).front();
}

EstimateWithError classical_kernel_expectation(const EnergyContext& ctx, const Observable& g, const McParams& mc)
{
    return expectation(GibbsTarget::classical(ctx), g, mc);
}

EstimateWithError log_partition_estimate(const GibbsTarget& target, std::size_t samples, std::uint64_t seed)
{
    if (samples < 2) throw std::invalid_argument("log partition estimate needs at least two samples");
    const auto start = std::chrono::steady_clock::now();
    const EnergyModel model = target.energy_model();
    Rng rng(seed);
    std::vector<double> log_w(samples);
    std::vector<double> scratch(model.scratch_size());
    for (auto& lw : log_w) lw = -model.total(prior_draw(target, rng), scratch);
    const double top = *std::max_element(log_w.begin(), log_w.end());
    double s1 = 0.0, s2 = 0.0;
    for (double lw : log_w) {
        const double w = std::exp(lw - top);
        s1 += w;
        s2 += w * w;
    }
    const double n = static_cast<double>(samples);
    const double mean = s1 / n;
    const double var = std::max(0.0, (s2 / n - mean * mean) * n / (n - 1.0));
    EstimateWithError est;
    est.value = top + std::log(mean);
    // delta method: se(log W) = se(W) / W
    est.std_error = std::sqrt(var / n) / mean;
    est.samples = samples;
    est.ess = std::min(n, s1 * s1 / s2);
    est.seed = seed;
    est.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (est.std_error > 0.1) est.flags.push_back("unreliable: relative standard error above 10%");
    return est;
}

Observable quasiclassical_to_classical(const Observable& f)
{
    if (!f.class_invariant)
        throw std::invalid_argument("observable '" + f.name + "' is not declared invariant on boundary classes");
    Observable g;
    g.name = f.name;
    g.class_invariant = true;
    g.fn = [fn = f.fn](const SampleView& v) {
        if (!v.is_classical()) throw std::invalid_argument("reduced observable expects a classical sample");
        const ModeBasis basis(v.beta(), 1);
        const std::size_t d = basis.mode_count();
        std::vector<double> coeffs(v.interior().size() * d, 0.0);
        const double root_beta = std::sqrt(v.beta());
        for (std::size_t j = 0; j < v.interior().size(); ++j) coeffs[j * d] = v.interior()[j] * root_beta;
        return fn(SampleView(v.context(), basis, coeffs));
    };
    return g;
}

}  // namespace loopgibbs
