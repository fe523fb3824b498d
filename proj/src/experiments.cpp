#include "loopgibbs/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "loopgibbs/oracle.hpp"

namespace loopgibbs {

namespace fs = std::filesystem;

std::string format_number(double x)
{
    if (std::isnan(x)) return "NA";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return {buf, end};
}

std::string csv_safe(std::string s)
{
    // Site labels carry commas.
    std::replace(s.begin(), s.end(), ',', ';');
    return s;
}

void write_sweep_row(std::ostream& os, const SweepRow& r, bool timing)
{
    os << csv_safe(r.model_id) << ',' << csv_safe(r.kind) << ',' << format_number(r.beta) << ',' << r.m << ',' << r.sites << ','
       << r.n_max << ',' << format_number(r.estimate.value) << ',' << format_number(r.estimate.std_error) << ','
       << format_number(r.estimate.ess) << ',' << r.estimate.seed << ','
       << (timing ? format_number(r.estimate.wall_seconds) : std::string("NA")) << '\n';
}

namespace {

struct Session {
    ExperimentConfig cfg;
    std::uint64_t seed;
    fs::path out;
};

Session open_session(const RunOptions& opts, bool config_required)
{
    Session s;
    if (opts.config_path) {
        s.cfg = load_config(*opts.config_path);
    } else if (config_required) {
        throw ConfigError("--config is required for this command");
    }
    s.seed = opts.seed.value_or(s.cfg.seed);
    s.out = opts.out.value_or(s.cfg.output);
    fs::create_directories(s.out);
    return s;
}

std::ofstream open_csv(const fs::path& path, const char* header)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << header << '\n';
    return os;
}

RunManifest manifest_for(const std::string& command, const Session& s, const RunOptions& opts)
{
    RunManifest m;
    m.command = command;
    m.seed = s.seed;
    m.workers = opts.workers ? opts.workers : default_workers();
    m.config = s.cfg.snapshot;
    if (!s.cfg.snapshot.is_null()) {
        nlohmann::json tail = nlohmann::json::object();
        for (const auto& mass : s.cfg.masses) tail[mass.str()] = truncation_tail(mass, s.cfg.beta, s.cfg.n_max);
        m.diagnostics["truncation_tail"] = tail;
    }
    return m;
}

/// |a - b| with a combined error bar.
struct Difference {
    double value;
    double std_error;
};

Difference abs_difference(const EstimateWithError& a, double b, double sb)
{
    return {std::abs(a.value - b), combined_stderr(a.std_error, sb)};
}

bool nonincreasing(const std::vector<Difference>& d, double sigmas)
{
    for (std::size_t i = 0; i + 1 < d.size(); ++i)
        if (d[i + 1].value > d[i].value + sigmas * combined_stderr(d[i].std_error, d[i + 1].std_error)) return false;
    return true;
}

}  // namespace

int cmd_trace_distance(const RunOptions& opts, std::ostream& log)
{
    Session s = open_session(opts, false);
    double beta = 2.0 * std::numbers::pi;
    std::vector<Mass> masses{Mass(1.0), Mass(10.0), Mass(100.0), Mass(1e4)};
    std::size_t sites = 1;
    long long n_max = 64;
    if (opts.config_path) {
        beta = s.cfg.beta;
        masses.clear();
        for (const auto& m : s.cfg.masses)
            if (!m.is_infinite()) masses.push_back(m);
        sites = s.cfg.box.size();
        n_max = s.cfg.n_max;
    }
    if (opts.n_max) {
        if (*opts.n_max < 1) throw ConfigError("--n-max must be positive");
        n_max = *opts.n_max;
    }
    RunManifest man = manifest_for("trace-distance", s, opts);
    man.outputs = {"trace_distance.csv"};
    write_manifest(s.out, man);

    auto csv = open_csv(s.out / "trace_distance.csv", "beta,m,sites,n_max,trace_distance,closed_form,bound,within_bound");
    bool ok = true;
    log << "beta = " << format_number(beta) << ", |Lambda| = " << sites << '\n';
    for (const Mass& m : masses) {
        const double exact = trace_distance(m, beta, sites, TraceSum::exact);
        const double value = opts.exact ? exact : trace_distance(m, beta, sites, TraceSum::partial_tailed, n_max);
        const double bound = trace_distance_bound(m, beta, sites);
        const bool within = value <= bound;
        ok = ok && within;
        csv << format_number(beta) << ',' << m.str() << ',' << sites << ','
            << (opts.exact ? std::string("exact") : std::to_string(n_max)) << ',' << format_number(value) << ','
            << format_number(exact) << ',' << format_number(bound) << ',' << (within ? "true" : "false") << '\n';
        log << "m = " << std::setw(8) << m.str() << "  trace distance " << std::setw(22) << format_number(value)
            << "  closed form " << std::setw(22) << format_number(exact) << "  bound " << format_number(bound)
            << (within ? "" : "  BOUND VIOLATED") << '\n';
    }
    return ok ? kExitPass : kExitCheckFailed;
}

int cmd_classical_limit(const RunOptions& opts, std::ostream& log)
{
    Session s = open_session(opts, true);
    const ExperimentConfig& cfg = s.cfg;
    if (cfg.periodic) throw ConfigError("classical-limit needs fixed boundary data");
    const ModeBasis basis = cfg.basis();
    const auto panel = cfg.panel();
    const std::size_t classes = cfg.boundary_classes.size();
    const std::size_t nm = cfg.masses.size();

    std::vector<EnergyContext> contexts;
    for (std::size_t c = 0; c < classes; ++c) contexts.push_back(cfg.context(c));
    std::vector<GibbsTarget> targets;
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t k = 0; k < nm; ++k) targets.push_back(GibbsTarget::loops(contexts[c], basis, cfg.masses[k]));
    for (const auto& t : targets) require_sampleable(t);

    // Reference: classical kernel of the reduced observables, by quadrature when tractable.
    std::vector<Observable> reduced;
    std::vector<std::size_t> reduced_of(panel.size(), SIZE_MAX);
    for (std::size_t i = 0; i < panel.size(); ++i)
        if (panel[i].class_invariant) {
            reduced_of[i] = reduced.size();
            reduced.push_back(quasiclassical_to_classical(panel[i]));
        }
    const GibbsTarget classical = GibbsTarget::classical(cfg.reduced_context());

    RunManifest man = manifest_for("classical-limit", s, opts);
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t k = 0; k < nm; ++k)
            man.task_seeds["zeta" + std::to_string(c) + "/m=" + cfg.masses[k].str()] = derive_seed(s.seed, {1, c, k});
    man.task_seeds["classical-reference"] = derive_seed(s.seed, {2});
    man.outputs = {"classical_limit.csv", "classical_limit_delta.csv"};
    write_manifest(s.out, man);

    std::vector<double> ref_value(reduced.size()), ref_error(reduced.size(), 0.0);
    std::vector<EstimateWithError> ref_estimates;
    bool oracle_reference = false;
    if (!reduced.empty()) {
        try {
            QuadratureOptions q = cfg.oracle;
            const auto r = oracle_expectations(classical, reduced, q);
            for (std::size_t i = 0; i < r.size(); ++i) {
                ref_value[i] = r[i].value;
                for (const auto& w : r[i].warnings) log << "oracle: " << w << '\n';
            }
            oracle_reference = true;
        } catch (const std::invalid_argument&) {
            ref_estimates = expectations(classical, reduced, cfg.mc(derive_seed(s.seed, {2}), 1));
            for (std::size_t i = 0; i < reduced.size(); ++i) {
                ref_value[i] = ref_estimates[i].value;
                ref_error[i] = ref_estimates[i].std_error;
            }
        }
    }
    log << "reference: " << (oracle_reference ? "quadrature" : "classical MCMC") << '\n';

    std::vector<std::vector<EstimateWithError>> results(targets.size());
    parallel_for(targets.size(), opts.workers, [&](std::size_t t) {
        const std::size_t c = t / nm, k = t % nm;
        results[t] = expectations(targets[t], panel, cfg.mc(derive_seed(s.seed, {1, c, k}), 1));
    });

    auto csv = open_csv(s.out / "classical_limit.csv", kSweepHeader);
    for (std::size_t i = 0; i < panel.size(); ++i) {
        for (std::size_t c = 0; c < classes; ++c)
            for (std::size_t k = 0; k < nm; ++k) {
                const std::size_t t = c * nm + k;
                write_sweep_row(csv,
                                {cfg.model_id + ":" + panel[i].name + ":zeta" + std::to_string(c),
                                 to_string(targets[t].kind()), cfg.beta, cfg.masses[k].str(), cfg.box.size(), cfg.n_max,
                                 results[t][i]},
                                opts.timing);
            }
        if (reduced_of[i] != SIZE_MAX) {
            EstimateWithError ref;
            const std::size_t r = reduced_of[i];
            if (oracle_reference) {
                ref.value = ref_value[r];
                ref.std_error = 0.0;
                ref.ess = std::numeric_limits<double>::quiet_NaN();
                ref.seed = 0;
            } else {
                ref = ref_estimates[r];
            }
            write_sweep_row(csv,
                            {cfg.model_id + ":" + panel[i].name + ":reference",
                             oracle_reference ? "classical-quadrature" : "classical", cfg.beta, "inf", cfg.box.size(),
                             cfg.n_max, ref},
                            opts.timing);
        }
    }

    auto dcsv = open_csv(s.out / "classical_limit_delta.csv", "model_id,observable,boundary,m,delta,stderr");
    bool ok = true;
    for (std::size_t i = 0; i < panel.size(); ++i) {
        if (reduced_of[i] == SIZE_MAX) {
            log << panel[i].name << ": not class-invariant, reported only\n";
            continue;
        }
        const std::size_t r = reduced_of[i];
        for (std::size_t c = 0; c < classes; ++c) {
            std::vector<Difference> deltas;
            for (std::size_t k = 0; k < nm; ++k) {
                const auto d = abs_difference(results[c * nm + k][i], ref_value[r], ref_error[r]);
                if (!cfg.masses[k].is_infinite()) deltas.push_back(d);
                dcsv << cfg.model_id << ',' << csv_safe(panel[i].name) << ",zeta" << c << ',' << cfg.masses[k].str() << ','
                     << format_number(d.value) << ',' << format_number(d.std_error) << '\n';
            }
            const bool mono = nonincreasing(deltas, 3.0);
            ok = ok && mono;
            log << panel[i].name << " zeta" << c << ": Delta(m) "
                << (mono ? "nonincreasing" : "NOT nonincreasing") << " within 3 standard errors\n";
        }
        for (std::size_t c = 1; c < classes; ++c) {
            std::vector<Difference> gaps;
            for (std::size_t k = 0; k < nm; ++k) {
                const auto& a = results[k][i];
                const auto& b = results[c * nm + k][i];
                const Difference g{std::abs(a.value - b.value), combined_stderr(a.std_error, b.std_error)};
                if (!cfg.masses[k].is_infinite()) gaps.push_back(g);
                dcsv << cfg.model_id << ',' << csv_safe(panel[i].name) << ",gap0-" << c << ',' << cfg.masses[k].str() << ','
                     << format_number(g.value) << ',' << format_number(g.std_error) << '\n';
            }
            const bool mono = nonincreasing(gaps, 3.0);
            ok = ok && mono;
            log << panel[i].name << " zeta0 vs zeta" << c << ": gap " << (mono ? "nonincreasing" : "NOT nonincreasing")
                << " within 3 standard errors\n";
        }
    }
    for (const auto& rs : results)
        for (const auto& e : rs)
            for (const auto& f : e.flags) log << "flag: " << f << '\n';
    log << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kExitPass : kExitCheckFailed;
}

int cmd_order_parameter(const RunOptions& opts, std::ostream& log)
{
    Session s = open_session(opts, true);
    const ExperimentConfig& cfg = s.cfg;
    if (!cfg.periodic) throw ConfigError("order-parameter needs a periodic model");
    const EnergyContext ctx = cfg.context();
    const ModeBasis basis = cfg.basis();
    const std::size_t nm = cfg.masses.size();
    std::vector<GibbsTarget> targets;
    for (const auto& m : cfg.masses) targets.push_back(GibbsTarget::loops(ctx, basis, m));
    targets.push_back(GibbsTarget::classical(ctx));
    for (const auto& t : targets) require_sampleable(t);

    RunManifest man = manifest_for("order-parameter", s, opts);
    for (std::size_t k = 0; k < nm; ++k) man.task_seeds["P/m=" + cfg.masses[k].str()] = derive_seed(s.seed, {1, k});
    man.task_seeds["Q"] = derive_seed(s.seed, {2});
    man.outputs = {"order_parameter.csv"};
    write_manifest(s.out, man);

    const Observable P = order_parameter_p_observable();
    const Observable Q = order_parameter_q_observable();
    std::vector<EstimateWithError> est(targets.size());
    parallel_for(targets.size(), opts.workers, [&](std::size_t t) {
        if (t < nm)
            est[t] = expectation(targets[t], P, cfg.mc(derive_seed(s.seed, {1, t}), 1));
        else
            est[t] = expectation(targets[t], Q, cfg.mc(derive_seed(s.seed, {2}), 1));
    });

    auto csv = open_csv(s.out / "order_parameter.csv", kSweepHeader);
    const std::size_t n = cfg.box.size();
    std::vector<SweepPoint> finite;
    for (std::size_t k = 0; k < nm; ++k) {
        const auto kind = to_string(targets[k].kind());
        write_sweep_row(csv, {cfg.model_id + ":P", kind, cfg.beta, cfg.masses[k].str(), n, cfg.n_max, est[k]}, opts.timing);
        write_sweep_row(csv,
                        {cfg.model_id + ":P_tilde", kind, cfg.beta, cfg.masses[k].str(), n, cfg.n_max,
                         normalize(est[k], cfg.beta, Normalization::beta_squared)},
                        opts.timing);
        if (!cfg.masses[k].is_infinite()) finite.push_back({cfg.masses[k], targets[k].kind(), est[k], std::nullopt});
    }
    const EstimateWithError& q = est[nm];
    write_sweep_row(csv, {cfg.model_id + ":Q", to_string(TargetKind::classical_periodic), cfg.beta, "inf", n, cfg.n_max, q},
                    opts.timing);

    bool ok = true;
    for (std::size_t k = 0; k < nm; ++k) {
        const auto pt = normalize(est[k], cfg.beta, Normalization::beta_squared);
        const double z = z_score(pt.value, pt.std_error, q.value, q.std_error);
        log << "m = " << std::setw(8) << cfg.masses[k].str() << "  P = " << format_number(est[k].value) << " +- "
            << format_number(est[k].std_error) << "  P/beta^2 = " << format_number(pt.value)
            << "  z vs Q = " << format_number(z) << '\n';
        if (cfg.masses[k].is_infinite() && std::abs(z) > 3.0) ok = false;
    }
    log << "Q = " << format_number(q.value) << " +- " << format_number(q.std_error) << '\n';
    const auto mono = monotonicity_check(ctx, finite);
    if (!mono.applicable) {
        log << "monotonicity check refused: " << mono.reason << '\n';
    } else {
        log << "monotonicity: " << mono.reason << '\n';
        ok = ok && mono.passed;
    }
    for (const auto& e : est)
        for (const auto& f : e.flags) log << "flag: " << f << '\n';
    log << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kExitPass : kExitCheckFailed;
}

int cmd_oracle_compare(const RunOptions& opts, std::ostream& log)
{
    Session s = open_session(opts, true);
    const ExperimentConfig& cfg = s.cfg;
    if (cfg.box.size() > 2) throw ConfigError("oracle-compare supports at most 2 sites");
    if (cfg.n_max > 2) throw ConfigError("oracle-compare needs discretization.n_max <= 2");
    const ModeBasis basis = cfg.basis();
    const EnergyContext ctx = cfg.context(0);
    const EnergyContext reduced_ctx = cfg.reduced_context();
    const auto panel = cfg.panel();
    std::vector<Observable> reduced;
    for (const auto& f : panel)
        if (f.class_invariant) reduced.push_back(quasiclassical_to_classical(f));

    std::vector<GibbsTarget> targets;
    std::vector<const std::vector<Observable>*> fsets;
    for (const auto& m : cfg.masses) {
        targets.push_back(GibbsTarget::loops(ctx, basis, m));
        fsets.push_back(&panel);
    }
    targets.push_back(GibbsTarget::classical(reduced_ctx));
    fsets.push_back(&reduced);
    for (const auto& t : targets) require_sampleable(t);

    RunManifest man = manifest_for("oracle-compare", s, opts);
    for (std::size_t t = 0; t < targets.size(); ++t)
        man.task_seeds["target" + std::to_string(t) + ":" + to_string(targets[t].kind())] = derive_seed(s.seed, {1, t});
    man.outputs = {"oracle_compare.csv", "consistency.csv"};
    write_manifest(s.out, man);

    std::vector<std::vector<EstimateWithError>> mc(targets.size());
    std::vector<std::vector<OracleEstimate>> quad(targets.size());
    parallel_for(targets.size(), opts.workers, [&](std::size_t t) {
        quad[t] = oracle_expectations(targets[t], *fsets[t], cfg.oracle);
        mc[t] = expectations(targets[t], *fsets[t], cfg.mc(derive_seed(s.seed, {1, t}), 1));
    });

    bool ok = true;
    auto csv = open_csv(s.out / "oracle_compare.csv", "model_id,kind,m,observable,oracle,estimate,stderr,z,within_3se");
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const std::string m = targets[t].is_classical() ? "inf" : targets[t].mass().str();
        for (std::size_t i = 0; i < fsets[t]->size(); ++i) {
            const auto& e = mc[t][i];
            const double z = z_score(e.value, e.std_error, quad[t][i].value, 0.0);
            const bool within = std::abs(z) <= 3.0;
            ok = ok && within;
            csv << cfg.model_id << ',' << to_string(targets[t].kind()) << ',' << m << ',' << csv_safe((*fsets[t])[i].name) << ','
                << format_number(quad[t][i].value) << ',' << format_number(e.value) << ','
                << format_number(e.std_error) << ',' << format_number(z) << ',' << (within ? "true" : "false") << '\n';
            log << std::setw(24) << to_string(targets[t].kind()) << " m = " << std::setw(6) << m << "  "
                << std::setw(22) << (*fsets[t])[i].name << "  oracle " << format_number(quad[t][i].value) << "  mcmc "
                << format_number(e.value) << " +- " << format_number(e.std_error) << "  z = " << format_number(z)
                << '\n';
            for (const auto& w : quad[t][i].warnings) log << "oracle: " << w << '\n';
        }
    }

    auto ccsv = open_csv(s.out / "consistency.csv", "model_id,kind,m,observable,gap,below_1e-6");
    if (!cfg.periodic && cfg.box.size() == 2) {
        const LatticeBox inner = LatticeBox::single(cfg.box.coord(0));
        for (std::size_t t = 0; t < targets.size(); ++t) {
            const std::string m = targets[t].is_classical() ? "inf" : targets[t].mass().str();
            for (const auto& f : *fsets[t]) {
                const double gap = consistency_gap(targets[t], inner, f, cfg.oracle);
                const bool pass = gap < 1e-6;
                ok = ok && pass;
                ccsv << cfg.model_id << ',' << to_string(targets[t].kind()) << ',' << m << ',' << csv_safe(f.name) << ','
                     << format_number(gap) << ',' << (pass ? "true" : "false") << '\n';
                log << "consistency gap " << to_string(targets[t].kind()) << " m = " << m << " " << f.name << ": "
                    << format_number(gap) << '\n';
            }
        }
    }
    log << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kExitPass : kExitCheckFailed;
}

int cmd_sample(const RunOptions& opts, std::ostream& log)
{
    Session s = open_session(opts, true);
    const ExperimentConfig& cfg = s.cfg;
    const EnergyContext ctx = cfg.context(0);
    const GibbsTarget target = GibbsTarget::loops(ctx, cfg.basis(), cfg.masses.front());
    require_sampleable(target);

    RunManifest man = manifest_for("sample", s, opts);
    for (std::size_t c = 0; c < cfg.chains; ++c) {
        man.task_seeds["chain" + std::to_string(c)] = derive_seed(s.seed, {c});
        man.outputs.push_back("chain_" + std::to_string(c) + ".ckpt");
    }
    man.outputs.push_back("samples.csv");
    write_manifest(s.out, man);

    std::vector<std::string> rows(cfg.chains);
    std::vector<double> acceptance(cfg.chains);
    const std::size_t d = target.site_dim();
    parallel_for(cfg.chains, opts.workers, [&](std::size_t c) {
        Chain chain(target, cfg.chain, derive_seed(s.seed, {c}));
        chain.burn_in();
        std::ostringstream os;
        for (std::size_t i = 0; i < cfg.chain.samples; ++i) {
            for (std::size_t t = 0; t < cfg.chain.thin; ++t) chain.sweep();
            const auto x = chain.state();
            for (std::size_t j = 0; j < target.sites(); ++j)
                for (std::size_t q = 0; q < d; ++q)
                    os << c << ',' << i << ',' << csv_safe(format_coord(cfg.box.coord(j))) << ',' << q << ','
                       << format_number(x[j * d + q]) << '\n';
        }
        chain.check_energy();
        acceptance[c] = chain.acceptance();
        std::ofstream ck(s.out / ("chain_" + std::to_string(c) + ".ckpt"), std::ios::binary);
        chain.save(ck);
        rows[c] = os.str();
    });
    auto csv = open_csv(s.out / "samples.csv", "chain,sample,site,mode,coefficient");
    for (const auto& r : rows) csv << r;
    for (std::size_t c = 0; c < cfg.chains; ++c)
        log << "chain " << c << ": acceptance " << format_number(acceptance[c]) << '\n';
    return kExitPass;
}

}  // namespace loopgibbs
