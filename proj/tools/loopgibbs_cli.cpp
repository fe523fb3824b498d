#include <exception>
#include <iostream>

#include "CLI11.hpp"

#include "loopgibbs/experiments.hpp"

using namespace loopgibbs;

int main(int argc, char** argv)
{
    CLI::App app{"Loop-space Gibbs measures: classical limit experiments"};
    app.require_subcommand(1);

    RunOptions opts;
    std::string config;
    std::uint64_t seed = 0;
    std::string out;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", config, "experiment config (JSON)")->check(CLI::ExistingFile);
        if (config_required) c->required();
        sub->add_option("--seed", seed, "root seed (overrides the config)");
        sub->add_option("--workers", opts.workers, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
        sub->add_option("--out", out, "output directory (overrides the config)");
        sub->add_flag("--timing", opts.timing, "record wall-clock seconds in result rows");
    };

    auto* trace = app.add_subcommand("trace-distance", "trace distance to the quasiclassical covariance and its bound");
    add_common(trace, false);
    trace->add_flag("--exact", opts.exact, "use the closed form instead of the truncated series");
    long long n_max = 0;
    trace->add_option("--n-max", n_max, "series cutoff (default 64 or the config's n_max)");
    auto* limit = app.add_subcommand("classical-limit", "m-sweep of panel observables against the classical kernel");
    add_common(limit, true);
    auto* order = app.add_subcommand("order-parameter", "periodic order parameters P, P/beta^2 and Q");
    add_common(order, true);
    auto* oracle = app.add_subcommand("oracle-compare", "MCMC against quadrature on tiny instances");
    add_common(oracle, true);
    auto* sample = app.add_subcommand("sample", "dump raw chains and checkpoints");
    add_common(sample, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitPass : kExitUsage;
    }

    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--config")) opts.config_path = config;
        if (sub->count("--seed")) opts.seed = seed;
        if (sub->count("--out")) opts.out = out;
    }

    if (trace->count("--n-max")) opts.n_max = n_max;

    try {
        if (*trace) return cmd_trace_distance(opts, std::cout);
        if (*limit) return cmd_classical_limit(opts, std::cout);
        if (*order) return cmd_order_parameter(opts, std::cout);
        if (*oracle) return cmd_oracle_compare(opts, std::cout);
        if (*sample) return cmd_sample(opts, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid model: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
    return kExitUsage;
}
