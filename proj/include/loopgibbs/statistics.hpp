#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace loopgibbs {

struct EstimateWithError {
    double value = 0.0;
    double std_error = 0.0;
    double ess = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    /// Non-fatal diagnostics (acceptance out of range, unreliable estimate, ...).
    std::vector<std::string> flags;
};

inline constexpr std::size_t kDefaultBatches = 32;

/// Mean with a batch-means standard error. Each series is one independent
/// chain; it is cut into `batches_per_series` contiguous batches and all
/// batch means are pooled. The mean is a running (Welford) mean, so a
/// constant series reproduces its value exactly.
EstimateWithError batch_means(std::span<const std::vector<double>> series, std::size_t batches_per_series = kDefaultBatches);
EstimateWithError batch_means(const std::vector<double>& series, std::size_t batches = kDefaultBatches);

/// Sample mean and standard error of independent draws.
EstimateWithError iid_mean(std::span<const double> values);

/// z-score of a - b under independent errors; 0 when both errors vanish and a == b.
double z_score(double a, double sa, double b, double sb);
double combined_stderr(double sa, double sb);

/// Runs fn(i) for i in [0, count) on `workers` threads. Each index runs
/// exactly once; callers write results into slot i, so the merged output is
/// independent of scheduling. workers == 0 means hardware concurrency.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

std::size_t default_workers();

}  // namespace loopgibbs
