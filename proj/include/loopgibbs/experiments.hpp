#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "loopgibbs/config.hpp"
#include "loopgibbs/observables.hpp"

namespace loopgibbs {

/// Exit codes shared by all subcommands.
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

struct RunOptions {
    std::optional<std::string> config_path;
    /// Overrides the config seed.
    std::optional<std::uint64_t> seed;
    /// 0 = hardware concurrency.
    std::size_t workers = 0;
    /// Overrides the config output directory.
    std::optional<std::string> out;
    bool exact = false;
    /// Series cutoff for trace-distance (overrides the config).
    std::optional<long long> n_max;
    /// Fill wall_seconds; off by default so result files are reproducible.
    bool timing = false;
};

/// Column header of every sweep CSV.
inline constexpr const char* kSweepHeader =
    "model_id,kind,beta,m,sites,n_max,estimate,stderr,ess,seed,wall_seconds";

/// Shortest round-trip decimal; "NA" for NaN, "inf"/"-inf" for infinities.
std::string format_number(double x);

struct SweepRow {
    std::string model_id;
    std::string kind;
    double beta;
    std::string m;
    std::size_t sites;
    int n_max;
    EstimateWithError estimate;
};

/// Replaces commas, which site labels contain.
std::string csv_safe(std::string s);

void write_sweep_row(std::ostream& os, const SweepRow& row, bool timing);

int cmd_trace_distance(const RunOptions& opts, std::ostream& log);
int cmd_classical_limit(const RunOptions& opts, std::ostream& log);
int cmd_order_parameter(const RunOptions& opts, std::ostream& log);
int cmd_oracle_compare(const RunOptions& opts, std::ostream& log);
int cmd_sample(const RunOptions& opts, std::ostream& log);

}  // namespace loopgibbs
