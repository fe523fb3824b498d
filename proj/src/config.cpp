#include "loopgibbs/config.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <thread>

#include "loopgibbs/observables.hpp"

namespace loopgibbs {

using json = nlohmann::json;

namespace {

/// Rejects keys outside `allowed`; `where` names the block in messages.
void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T read(const json& obj, const char* key, const std::string& where, T fallback)
{
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

double read_number(const json& obj, const char* key, const std::string& where, double fallback)
{
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
    return obj.at(key).get<double>();
}

std::size_t read_count(const json& obj, const char* key, const std::string& where, std::size_t fallback)
{
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number_unsigned()) throw ConfigError(where + "." + key + " must be a nonnegative integer");
    return obj.at(key).get<std::size_t>();
}

Coord read_coord(const json& v, const std::string& where)
{
    if (!v.is_array() || v.empty()) throw ConfigError(where + " must be a nonempty integer array");
    Coord c;
    for (const auto& x : v) {
        if (!x.is_number_integer()) throw ConfigError(where + " must contain integers");
        c.push_back(x.get<int>());
    }
    return c;
}

Polynomial read_polynomial(const json& obj, const std::string& where)
{
    Polynomial p;
    p.a = read_number(obj, "a", where, 0.0);
    if (obj.contains("b")) {
        if (!obj.at("b").is_array()) throw ConfigError(where + ".b must be an array of numbers");
        for (const auto& x : obj.at("b")) {
            if (!x.is_number()) throw ConfigError(where + ".b must be an array of numbers");
            p.b.push_back(x.get<double>());
        }
    }
    return p;
}

Mass read_mass(const json& v)
{
    try {
        if (v.is_string()) return Mass::parse(v.get<std::string>());
        if (v.is_number()) return Mass(v.get<double>());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid mass: ") + e.what());
    }
    throw ConfigError("masses must be positive numbers or \"inf\"");
}

ModeParity read_parity(const std::string& s)
{
    if (s == "cos") return ModeParity::cosine;
    if (s == "sin") return ModeParity::sine;
    throw ConfigError("perturbation parity must be \"cos\" or \"sin\"");
}

std::string iso_time_utc()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

ExperimentConfig parse_config(const json& doc)
{
    check_keys(doc, "config",
               {"model_id", "seed", "output", "model", "discretization", "sampler", "sweep", "boundary", "observables",
                "oracle"});
    ExperimentConfig cfg;
    cfg.snapshot = doc;
    cfg.model_id = read<std::string>(doc, "model_id", "config", cfg.model_id);
    if (cfg.model_id.empty() || cfg.model_id.find_first_of(",\n\"") != std::string::npos)
        throw ConfigError("config.model_id must be nonempty and free of commas, quotes and newlines");
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw ConfigError("config.seed must be a nonnegative integer");
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    cfg.output = read<std::string>(doc, "output", "config", cfg.output);

    try {
        if (!doc.contains("model")) throw ConfigError("config.model is required");
        const json& model = doc["model"];
        check_keys(model, "model", {"lattice", "boundary", "coupling", "potential", "beta"});
        cfg.beta = read_number(model, "beta", "model", cfg.beta);
        if (!(cfg.beta > 0.0) || !std::isfinite(cfg.beta)) throw ConfigError("model.beta must be positive and finite");

        if (model.contains("lattice")) {
            const json& lat = model["lattice"];
            check_keys(lat, "model.lattice", {"extents", "lower", "upper"});
            if (lat.contains("extents")) {
                if (lat.contains("lower") || lat.contains("upper"))
                    throw ConfigError("model.lattice takes either extents or lower/upper");
                cfg.box = LatticeBox::from_extents(read_coord(lat["extents"], "model.lattice.extents"));
            } else {
                if (!lat.contains("lower") || !lat.contains("upper"))
                    throw ConfigError("model.lattice needs extents or both lower and upper");
                cfg.box = LatticeBox(read_coord(lat["lower"], "model.lattice.lower"),
                                     read_coord(lat["upper"], "model.lattice.upper"));
            }
        }

        const auto mode = read<std::string>(model, "boundary", "model", "fixed");
        if (mode != "fixed" && mode != "periodic") throw ConfigError("model.boundary must be \"fixed\" or \"periodic\"");
        cfg.periodic = mode == "periodic";

        if (model.contains("coupling")) {
            const json& c = model["coupling"];
            check_keys(c, "model.coupling", {"nearest_neighbor", "by_squared_distance"});
            if (c.contains("nearest_neighbor") && c.contains("by_squared_distance"))
                throw ConfigError("model.coupling takes one of nearest_neighbor or by_squared_distance");
            if (c.contains("nearest_neighbor")) {
                cfg.coupling = CouplingSpec::nearest_neighbor(read_number(c, "nearest_neighbor", "model.coupling", 0.0));
            } else if (c.contains("by_squared_distance")) {
                const json& t = c["by_squared_distance"];
                if (!t.is_object()) throw ConfigError("model.coupling.by_squared_distance must be an object");
                std::map<int, double> table;
                for (const auto& [k, v] : t.items()) {
                    std::size_t used = 0;
                    int rho2 = 0;
                    try {
                        rho2 = std::stoi(k, &used);
                    } catch (const std::exception&) {
                        used = 0;
                    }
                    if (used != k.size() || rho2 < 0) throw ConfigError("coupling keys must be squared distances");
                    if (!v.is_number()) throw ConfigError("coupling values must be numbers");
                    table[rho2] = v.get<double>();
                }
                cfg.coupling = CouplingSpec(table);
            }
        }

        if (model.contains("potential")) {
            const json& p = model["potential"];
            check_keys(p, "model.potential", {"a", "b", "phi4", "overrides"});
            cfg.potential = PotentialSpec(read_polynomial(p, "model.potential"), read<bool>(p, "phi4", "model.potential", false));
            if (p.contains("overrides")) {
                if (!p["overrides"].is_array()) throw ConfigError("model.potential.overrides must be an array");
                for (const auto& o : p["overrides"]) {
                    check_keys(o, "potential override", {"site", "a", "b"});
                    if (!o.contains("site")) throw ConfigError("potential override needs a site");
                    cfg.potential.set_override(read_coord(o["site"], "override.site"), read_polynomial(o, "override"));
                }
            }
        }

        if (doc.contains("discretization")) {
            const json& d = doc["discretization"];
            check_keys(d, "discretization", {"n_max", "grid_size"});
            cfg.n_max = static_cast<int>(read_count(d, "n_max", "discretization", 64));
            cfg.grid_size = read_count(d, "grid_size", "discretization", 0);
            if (cfg.n_max < 1) throw ConfigError("discretization.n_max must be positive");
            if (cfg.grid_size != 0 && cfg.grid_size < 4 * static_cast<std::size_t>(cfg.n_max))
                throw ConfigError("discretization.grid_size must be at least 4 n_max");
        }

        if (doc.contains("sampler")) {
            const json& s = doc["sampler"];
            check_keys(s, "sampler",
                       {"chains", "burn_in", "samples", "thin", "target_acceptance", "move", "check_interval",
                        "initial_step"});
            cfg.chains = read_count(s, "chains", "sampler", cfg.chains);
            cfg.chain.burn_in = read_count(s, "burn_in", "sampler", cfg.chain.burn_in);
            cfg.chain.samples = read_count(s, "samples", "sampler", cfg.chain.samples);
            cfg.chain.thin = read_count(s, "thin", "sampler", cfg.chain.thin);
            cfg.chain.check_interval = read_count(s, "check_interval", "sampler", cfg.chain.check_interval);
            cfg.chain.target_acceptance = read_number(s, "target_acceptance", "sampler", cfg.chain.target_acceptance);
            cfg.chain.initial_step = read_number(s, "initial_step", "sampler", cfg.chain.initial_step);
            const auto move = read<std::string>(s, "move", "sampler", "site");
            if (move != "site" && move != "global") throw ConfigError("sampler.move must be \"site\" or \"global\"");
            cfg.chain.move = move == "site" ? MoveKind::site : MoveKind::global;
            if (cfg.chains == 0) throw ConfigError("sampler.chains must be positive");
            if (cfg.chain.thin == 0) throw ConfigError("sampler.thin must be positive");
            if (!(cfg.chain.target_acceptance > 0.0 && cfg.chain.target_acceptance < 1.0))
                throw ConfigError("sampler.target_acceptance must lie in (0, 1)");
            if (!(cfg.chain.initial_step > 0.0 && cfg.chain.initial_step < 1.0))
                throw ConfigError("sampler.initial_step must lie in (0, 1)");
        }

        if (doc.contains("sweep")) {
            const json& s = doc["sweep"];
            check_keys(s, "sweep", {"m", "include_infinity"});
            cfg.masses.clear();
            if (s.contains("m")) {
                if (!s["m"].is_array()) throw ConfigError("sweep.m must be an array");
                for (const auto& v : s["m"]) cfg.masses.push_back(read_mass(v));
            }
            if (read<bool>(s, "include_infinity", "sweep", false) &&
                (cfg.masses.empty() || !cfg.masses.back().is_infinite()))
                cfg.masses.push_back(Mass::infinity());
            if (cfg.masses.empty()) throw ConfigError("sweep.m must not be empty");
            for (std::size_t i = 1; i < cfg.masses.size(); ++i)
                if (!(cfg.masses[i - 1] < cfg.masses[i])) throw ConfigError("sweep.m must be strictly ascending");
        }

        double fallback_y = 0.0;
        if (doc.contains("boundary")) {
            const json& b = doc["boundary"];
            check_keys(b, "boundary", {"default", "values", "classes"});
            if (cfg.periodic) throw ConfigError("periodic models take no boundary block");
            fallback_y = read_number(b, "default", "boundary", 0.0);
            if (b.contains("values")) {
                if (!b["values"].is_array()) throw ConfigError("boundary.values must be an array");
                for (const auto& v : b["values"]) {
                    check_keys(v, "boundary value", {"site", "value"});
                    if (!v.contains("site") || !v.contains("value")) throw ConfigError("boundary values need site and value");
                    const Coord site = read_coord(v["site"], "boundary.values.site");
                    if (cfg.box.contains(site)) throw ConfigError("boundary value given at interior site " + format_coord(site));
                    cfg.y[site] = read_number(v, "value", "boundary value", 0.0);
                }
            }
            if (b.contains("classes")) {
                if (!b["classes"].is_array() || b["classes"].empty()) throw ConfigError("boundary.classes must be a nonempty array");
                cfg.boundary_classes.clear();
                for (const auto& cls : b["classes"]) {
                    if (!cls.is_array()) throw ConfigError("each boundary class is an array of perturbations");
                    std::vector<Perturbation> perts;
                    for (const auto& p : cls) {
                        check_keys(p, "perturbation", {"site", "harmonic", "parity", "amplitude"});
                        if (!p.contains("site")) throw ConfigError("perturbation needs a site");
                        Perturbation q;
                        q.site = read_coord(p["site"], "perturbation.site");
                        q.harmonic = static_cast<int>(read_count(p, "harmonic", "perturbation", 1));
                        q.parity = read_parity(read<std::string>(p, "parity", "perturbation", "cos"));
                        q.amplitude = read_number(p, "amplitude", "perturbation", 0.0);
                        if (q.harmonic < 1 || q.harmonic > cfg.n_max)
                            throw ConfigError("perturbation harmonic must lie in [1, n_max]");
                        perts.push_back(q);
                    }
                    cfg.boundary_classes.push_back(std::move(perts));
                }
            }
        }
        if (!cfg.periodic)
            for (const Coord& site : cfg.collar())
                if (!cfg.y.count(site)) cfg.y[site] = fallback_y;
        for (const auto& cls : cfg.boundary_classes)
            for (const auto& p : cls)
                if (!cfg.y.count(p.site)) throw ConfigError("perturbation at " + format_coord(p.site) + " is not a boundary site");

        if (doc.contains("observables")) {
            if (!doc["observables"].is_array()) throw ConfigError("observables must be an array");
            for (const auto& o : doc["observables"]) {
                check_keys(o, "observable", {"kind", "site", "power", "bound"});
                ObservableRequest r;
                r.kind = read<std::string>(o, "kind", "observable", "");
                if (r.kind == "tanh" || r.kind == "gauss" || r.kind == "clip_path") {
                    r.site = o.contains("site") ? read_coord(o["site"], "observable.site") : cfg.box.lower();
                } else if (r.kind == "moment") {
                    r.power = static_cast<int>(read_count(o, "power", "observable", 2));
                    if (r.power < 1) throw ConfigError("observable power must be positive");
                } else {
                    throw ConfigError("unknown observable kind '" + r.kind + "'");
                }
                r.bound = read_number(o, "bound", "observable", 3.0);
                cfg.observables.push_back(r);
            }
        } else {
            cfg.observables.push_back({"tanh", cfg.box.lower(), 2, 3.0});
            cfg.observables.push_back({"gauss", cfg.box.lower(), 2, 3.0});
        }

        if (doc.contains("oracle")) {
            const json& o = doc["oracle"];
            check_keys(o, "oracle",
                       {"nodes", "oscillatory_nodes", "self_check", "refined_nodes", "refined_oscillatory_nodes",
                        "tolerance", "zero_node_scale"});
            cfg.oracle.nodes = read_count(o, "nodes", "oracle", cfg.oracle.nodes);
            cfg.oracle.oscillatory_nodes = read_count(o, "oscillatory_nodes", "oracle", cfg.oracle.oscillatory_nodes);
            cfg.oracle.self_check = read<bool>(o, "self_check", "oracle", cfg.oracle.self_check);
            cfg.oracle.refined_nodes = read_count(o, "refined_nodes", "oracle", cfg.oracle.refined_nodes);
            cfg.oracle.refined_oscillatory_nodes =
                read_count(o, "refined_oscillatory_nodes", "oracle", cfg.oracle.refined_oscillatory_nodes);
            cfg.oracle.self_check_tolerance = read_number(o, "tolerance", "oracle", cfg.oracle.self_check_tolerance);
            cfg.oracle.zero_node_scale = read_number(o, "zero_node_scale", "oracle", cfg.oracle.zero_node_scale);
            if (!(cfg.oracle.zero_node_scale > 0.0 && cfg.oracle.zero_node_scale <= 1.0))
                throw ConfigError("oracle.zero_node_scale must lie in (0, 1]");
            if (cfg.oracle.nodes == 0 || cfg.oracle.refined_nodes == 0) throw ConfigError("oracle node counts must be positive");
        }

        // Validate the model as a whole once.
        (void)cfg.context(0);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

std::vector<Coord> ExperimentConfig::collar() const
{
    std::set<Coord> out;
    if (periodic || coupling.is_zero()) return {};
    const int radius = static_cast<int>(std::floor(coupling.range()));
    const int dim = box.dimension();
    for (std::size_t j = 0; j < box.size(); ++j) {
        const Coord cj = box.coord(j);
        Coord off(dim, -radius);
        while (true) {
            const int rho2 = squared_norm(off);
            if (rho2 > 0 && coupling.at_squared_distance(rho2) != 0.0) {
                Coord ck = cj;
                for (int l = 0; l < dim; ++l) ck[l] += off[l];
                if (!box.contains(ck)) out.insert(ck);
            }
            int l = 0;
            while (l < dim && ++off[l] > radius) off[l++] = -radius;
            if (l == dim) break;
        }
    }
    return {out.begin(), out.end()};
}

LoopField ExperimentConfig::boundary_loops(std::size_t cls) const
{
    if (cls >= boundary_classes.size()) throw std::out_of_range("no boundary class " + std::to_string(cls));
    const ModeBasis b = basis();
    std::map<Coord, TemperatureLoop> perts;
    for (const auto& p : boundary_classes[cls]) {
        auto loop = TemperatureLoop::harmonic(b, p.harmonic, p.parity, p.amplitude);
        auto it = perts.find(p.site);
        if (it == perts.end()) {
            perts.emplace(p.site, loop);
        } else {
            for (std::size_t q = 0; q < b.mode_count(); ++q) it->second[q] += loop[q];
        }
    }
    return equivalence_class_member(b, y, perts);
}

EnergyContext ExperimentConfig::context(std::size_t cls) const
{
    if (periodic) return EnergyContext(box, coupling, potential, beta, PeriodicBoundary{}, grid_size);
    return EnergyContext(box, coupling, potential, beta, boundary_loops(cls), grid_size);
}

EnergyContext ExperimentConfig::reduced_context() const
{
    if (periodic) return EnergyContext(box, coupling, potential, beta, PeriodicBoundary{}, grid_size);
    return EnergyContext(box, coupling, potential, beta, y, grid_size);
}

std::vector<Observable> ExperimentConfig::panel() const
{
    std::vector<Observable> out;
    for (const auto& r : observables) {
        if (r.kind == "tanh") out.push_back(tanh_time_average(r.site));
        else if (r.kind == "gauss") out.push_back(gaussian_time_average(r.site));
        else if (r.kind == "clip_path") out.push_back(clipped_path_value(r.site, r.bound));
        else {
            std::vector<Coord> sites;
            for (std::size_t j = 0; j < box.size(); ++j) sites.push_back(box.coord(j));
            out.push_back(clipped_average_moment(r.power, r.bound, std::move(sites)));
        }
    }
    return out;
}

McParams ExperimentConfig::mc(std::uint64_t task_seed, std::size_t workers) const
{
    McParams p;
    p.chain = chain;
    p.chains = chains;
    p.seed = task_seed;
    p.workers = workers;
    return p;
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& m)
{
    std::filesystem::create_directories(dir);
    json doc;
    doc["artifact"] = "loopgibbs";
    doc["artifact_version"] = kArtifactVersion;
    doc["command"] = m.command;
    doc["seed"] = m.seed;
    doc["workers"] = m.workers;
    doc["config"] = m.config;
    doc["task_seeds"] = m.task_seeds;
    doc["outputs"] = m.outputs;
    if (!m.diagnostics.is_null()) doc["diagnostics"] = m.diagnostics;
    doc["started_utc"] = iso_time_utc();
    char host[256] = {};
    if (gethostname(host, sizeof host - 1) != 0) host[0] = '\0';
    doc["host"] = {{"name", host}, {"hardware_threads", std::thread::hardware_concurrency()}};
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
    out << doc.dump(2) << '\n';
}

}  // namespace loopgibbs
