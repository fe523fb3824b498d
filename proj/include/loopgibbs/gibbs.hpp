#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "loopgibbs/gaussian.hpp"
#include "loopgibbs/sample.hpp"
#include "loopgibbs/statistics.hpp"
#include "loopgibbs/target.hpp"

namespace loopgibbs {

enum class MoveKind { site, global };

struct ChainParams {
    std::size_t burn_in = 2000;
    std::size_t samples = 10000;
    std::size_t thin = 1;
    double target_acceptance = 0.3;
    MoveKind move = MoveKind::site;
    /// Sweeps between full energy recomputations.
    std::size_t check_interval = 500;
    double initial_step = 0.5;
};

/// Acceptance band outside which a tuned chain is flagged.
inline constexpr double kMinAcceptance = 0.05;
inline constexpr double kMaxAcceptance = 0.95;
inline constexpr double kEnergyDriftTolerance = 1e-8;

struct ChainReport {
    std::size_t sweeps = 0;
    std::size_t recorded = 0;
    /// Mean post-burn-in acceptance over all blocks.
    double acceptance = 0.0;
    double min_block_acceptance = 1.0;
    double max_block_acceptance = 0.0;
    double max_energy_drift = 0.0;
    std::vector<std::string> flags;
};

/// Prior-preconditioned Crank-Nicolson chain,
///   c' = sqrt(1 - s^2) c + s xi,  xi ~ prior,
/// accepted with probability min{1, exp(E(c) - E(c'))}. Site moves update
/// one block at a time: the zero mode, then the oscillatory modes (frozen
/// when their prior variance vanishes). Each block has its own s, tuned
/// toward the target acceptance during burn-in and frozen afterwards.
class Chain {
public:
    Chain(const GibbsTarget& target, ChainParams params, std::uint64_t seed);
    Chain(const Chain&) = delete;
    Chain& operator=(const Chain&) = delete;

    const GibbsTarget& target() const { return *target_; }
    const ChainParams& params() const { return params_; }
    std::span<const double> state() const { return state_; }
    double energy() const { return cache_.total(); }
    bool tuned() const { return tuned_; }
    std::size_t sweeps() const { return sweeps_; }
    std::size_t block_count() const { return steps_.size(); }
    double step(std::size_t block) const { return steps_[block]; }
    /// Acceptance since the last reset (end of tuning).
    double acceptance(std::size_t block) const;
    double acceptance() const;
    double max_energy_drift() const { return max_drift_; }

    void set_state(std::span<const double> state);
    /// One sweep over all blocks (or one global move).
    void sweep();
    /// Runs burn-in with step tuning, then freezes the steps.
    void burn_in();
    /// Recomputes the energy from scratch; throws if the cache drifted.
    void check_energy();

    /// Versioned binary checkpoint: state, steps, counters and generator state.
    void save(std::ostream& os) const;
    void load(std::istream& is);

private:
    struct Block {
        std::size_t site;
        std::size_t first;
        std::size_t count;
    };

    void site_move(std::size_t b);
    void global_move();
    void reset_counts();

    const GibbsTarget* target_;
    ChainParams params_;
    EnergyModel model_;
    std::vector<double> state_;
    EnergyCache cache_;
    std::vector<Block> blocks_;
    std::vector<double> steps_;
    std::vector<std::uint64_t> accepted_;
    std::vector<std::uint64_t> proposed_;
    std::vector<double> prior_std_;
    Rng rng_;
    std::normal_distribution<double> normal_;
    std::uniform_real_distribution<double> uniform_;
    std::vector<double> proposal_;
    std::vector<double> path_;
    std::size_t sweeps_ = 0;
    double max_drift_ = 0.0;
    bool tuned_ = false;
};

/// Initial state drawn from the prior.
std::vector<double> prior_draw(const GibbsTarget& target, Rng& rng);

/// Runs burn-in then records every `thin`-th sweep. Requires
/// validate_stability(...).integrable for the target's potential.
ChainReport run_chain(const GibbsTarget& target, const ChainParams& params, std::uint64_t seed,
                      const std::function<void(std::span<const double>)>& on_sample);

struct McParams {
    ChainParams chain;
    std::size_t chains = 4;
    std::uint64_t seed = 1;
    /// 0 = hardware concurrency.
    std::size_t workers = 0;
};

/// Stability gate shared by every sampler entry point.
void require_sampleable(const GibbsTarget& target);

/// Independent chains (seeds derive_seed(mc.seed, {chain})) merged in chain
/// order; batch means over all chains.
std::vector<EstimateWithError> expectations(const GibbsTarget& target, std::span<const Observable> fs,
                                            const McParams& mc);
EstimateWithError expectation(const GibbsTarget& target, const Observable& f, const McParams& mc);

/// g over classical configurations under mu(. | y) with y taken from `ctx`.
EstimateWithError classical_kernel_expectation(const EnergyContext& ctx, const Observable& g, const McParams& mc);

/// log of the prior average of exp(-E), by independent prior draws.
/// Flagged when the relative error of the average exceeds 10%.
EstimateWithError log_partition_estimate(const GibbsTarget& target, std::size_t samples, std::uint64_t seed);

/// Maps a class-invariant loop observable f to g(x) = f(constant loops x).
/// Throws if f is not declared class-invariant.
Observable quasiclassical_to_classical(const Observable& f);

}  // namespace loopgibbs
