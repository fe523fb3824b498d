#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "loopgibbs/lattice.hpp"
#include "loopgibbs/loops.hpp"

namespace loopgibbs {

/// Marker for periodic (torus) boundary conditions.
struct PeriodicBoundary {
    bool operator==(const PeriodicBoundary&) const = default;
};

/// Exterior data: torus wrap, full loop-valued zeta, or its reduced form y.
using BoundaryData = std::variant<PeriodicBoundary, LoopField, ValueField>;

/// Everything the energy functionals need besides the configuration itself.
/// Free-boundary contexts must supply boundary data for every exterior site
/// within the interaction range of the box; construction fails otherwise.
class EnergyContext {
public:
    struct Neighbor {
        std::size_t site;
        double coupling;
    };
    struct ExteriorNeighbor {
        Coord site;
        double coupling;
    };

    EnergyContext(LatticeBox box, CouplingSpec coupling, PotentialSpec potential, double beta,
                  BoundaryData boundary, std::size_t grid_size = 0);

    const LatticeBox& box() const { return box_; }
    const CouplingSpec& coupling() const { return coupling_; }
    const PotentialSpec& potential() const { return potential_; }
    double beta() const { return beta_; }
    const BoundaryData& boundary() const { return boundary_; }
    bool is_periodic() const { return std::holds_alternative<PeriodicBoundary>(boundary_); }
    /// 0 selects default_grid_size for the loop basis in use.
    std::size_t grid_size() const { return grid_size_; }
    std::size_t grid_size_for(const ModeBasis& basis) const;

    const std::vector<Neighbor>& interior_neighbors(std::size_t site) const { return interior_[site]; }
    const std::vector<ExteriorNeighbor>& exterior_neighbors(std::size_t site) const { return exterior_[site]; }

    /// Exterior sites within range of the box (empty in periodic mode).
    std::vector<Coord> boundary_collar() const;

    /// Same model with different boundary data.
    EnergyContext with_boundary(BoundaryData boundary) const;

    /// Time average of the exterior configuration at `site`.
    double boundary_time_average(const Coord& site) const;

private:
    LatticeBox box_;
    CouplingSpec coupling_;
    PotentialSpec potential_;
    double beta_;
    BoundaryData boundary_;
    std::size_t grid_size_;
    std::vector<std::vector<Neighbor>> interior_;
    std::vector<std::vector<ExteriorNeighbor>> exterior_;
};

/// Energy in coefficient space for one representation of the site variables:
///   E(c) = sum_j onsite_j(c_j) + 1/2 sum_{j != k} K_jk <c_j, c_k> + sum_j <c_j, b_j>.
/// For loops, c_j are Fourier coefficients, onsite_j = int_0^beta U_j(omega_j) dtau
/// (trapezoid on the evaluation grid), K_jk = J_jk and b_j are the boundary
/// couplings, so E is E_{beta,Lambda}(omega|zeta). For classical variables,
/// c_j = x_j and every term carries `classical_scale` (beta for Gibbs weights,
/// 1 for I_Lambda itself).
class EnergyModel {
public:
    static EnergyModel loops(const EnergyContext& ctx, const ModeBasis& basis);
    static EnergyModel classical(const EnergyContext& ctx, double scale);

    bool is_classical() const { return !grid_.has_value(); }
    std::size_t sites() const { return polys_.size(); }
    std::size_t site_dim() const { return site_dim_; }
    const EvaluationGrid& grid() const { return *grid_; }
    std::size_t scratch_size() const { return grid_ ? grid_->size() : 0; }

    /// On-site term for one site. `scratch` must hold scratch_size() doubles.
    double onsite(std::size_t site, std::span<const double> c, std::span<double> scratch) const;
    /// On-site term from precomputed path values (loop representation only).
    double onsite_from_path(std::size_t site, std::span<const double> path) const;

    const std::vector<EnergyContext::Neighbor>& neighbors(std::size_t site) const { return neighbors_[site]; }
    std::span<const double> boundary_field(std::size_t site) const
    {
        return {boundary_.data() + site * site_dim_, site_dim_};
    }

    double total(std::span<const double> state) const;
    double total(std::span<const double> state, std::span<double> scratch) const;

private:
    EnergyModel() = default;

    std::size_t site_dim_ = 1;
    double scale_ = 1.0;
    std::optional<EvaluationGrid> grid_;
    std::vector<Polynomial> polys_;
    std::vector<std::vector<EnergyContext::Neighbor>> neighbors_;
    std::vector<double> boundary_;
};

/// Cached per-site terms for O(neighbours) single-site updates: on-site
/// values, path samples (loops) and interaction fields
/// h_j = sum_k K_jk c_k + b_j, so that
///   E(c with c_j -> c'_j) - E(c) = onsite(c'_j) - onsite(c_j) + <c'_j - c_j, h_j>.
class EnergyCache {
public:
    EnergyCache(const EnergyModel& model, std::span<const double> state);

    double total() const { return total_; }
    double onsite(std::size_t site) const { return onsite_[site]; }
    std::span<const double> field(std::size_t site) const
    {
        return {field_.data() + site * model_->site_dim(), model_->site_dim()};
    }
    std::span<const double> path(std::size_t site) const
    {
        const std::size_t n = model_->scratch_size();
        return {paths_.data() + site * n, n};
    }

    double interaction_delta(std::size_t site, std::span<const double> old_c, std::span<const double> new_c) const;

    /// Records an accepted single-site move. `new_path` is ignored for classical models.
    void commit(std::size_t site, std::span<const double> old_c, std::span<const double> new_c,
                std::span<const double> new_path, double new_onsite, double delta);

    /// Recomputes everything from `state`; returns |cached total - recomputed total|.
    double rebuild(std::span<const double> state);

private:
    const EnergyModel* model_;
    std::vector<double> onsite_;
    std::vector<double> paths_;
    std::vector<double> field_;
    double total_ = 0.0;
};

/// E_{beta,Lambda}(omega_Lambda | zeta). Requires fixed-boundary data.
double euclidean_energy(const LoopConfiguration& config, const EnergyContext& ctx);
/// I_Lambda(x_Lambda | y). Loop-valued boundary data is reduced to its time averages.
double classical_energy(std::span<const double> x, const EnergyContext& ctx);
/// E^per_{beta,Lambda}(omega_Lambda). Requires a periodic context.
double periodic_euclidean_energy(const LoopConfiguration& config, const EnergyContext& ctx);
/// I^per_Lambda(x_Lambda). Requires a periodic context.
double periodic_classical_energy(std::span<const double> x, const EnergyContext& ctx);

}  // namespace loopgibbs
