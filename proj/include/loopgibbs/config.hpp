#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "loopgibbs/energy.hpp"
#include "loopgibbs/gaussian.hpp"
#include "loopgibbs/gibbs.hpp"
#include "loopgibbs/oracle.hpp"

namespace loopgibbs {

/// Bad configuration or arguments (exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Perturbation {
    Coord site;
    int harmonic = 1;
    ModeParity parity = ModeParity::cosine;
    double amplitude = 0.0;
};

struct ObservableRequest {
    std::string kind;  ///< tanh | gauss | clip_path | moment
    Coord site;        ///< tanh, gauss, clip_path
    int power = 2;     ///< moment
    double bound = 3.0;
};

struct ExperimentConfig {
    std::string model_id = "model";

    LatticeBox box = LatticeBox::single({0});
    bool periodic = false;
    CouplingSpec coupling;
    PotentialSpec potential;
    double beta = 1.0;

    int n_max = 64;
    std::size_t grid_size = 0;

    ChainParams chain;
    std::size_t chains = 4;

    /// Ascending; may end with infinity.
    std::vector<Mass> masses{Mass(1.0)};

    /// Reduced boundary y on the collar; sites not listed get `boundary_default`.
    ValueField y;
    /// Boundary conditions in the class of y: each entry lists zero-mean
    /// perturbations added to the constant loops. Empty entry = constant loops.
    std::vector<std::vector<Perturbation>> boundary_classes{{}};

    std::vector<ObservableRequest> observables;
    QuadratureOptions oracle;

    std::uint64_t seed = 1;
    std::string output = "out";

    /// The parsed document, echoed into the manifest.
    nlohmann::json snapshot;

    ModeBasis basis() const { return ModeBasis(beta, n_max); }
    /// Sites outside the box within interaction range.
    std::vector<Coord> collar() const;
    /// Periodic context, or fixed context with boundary class `cls` built on `basis`.
    EnergyContext context(std::size_t cls = 0) const;
    /// Fixed context with the reduced boundary y (classical and quasiclassical reference).
    EnergyContext reduced_context() const;
    LoopField boundary_loops(std::size_t cls) const;
    std::vector<Observable> panel() const;
    McParams mc(std::uint64_t seed, std::size_t workers) const;
};

/// Strict parsing: unknown keys, wrong types and invalid values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Written before any result file.
struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    nlohmann::json config;
    /// Named task seeds.
    std::map<std::string, std::uint64_t> task_seeds;
    std::vector<std::string> outputs;
    /// Free-form run diagnostics, e.g. the spectral tail dropped by truncation.
    nlohmann::json diagnostics;
};

inline constexpr const char* kArtifactVersion = "1.0.0";

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

}  // namespace loopgibbs
