#include "loopgibbs/energy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace loopgibbs {

namespace {

void for_each_offset(int dimension, int radius, const auto& fn)
{
    Coord v(dimension, -radius);
    while (true) {
        fn(v);
        int l = 0;
        while (l < dimension && ++v[l] > radius) v[l++] = -radius;
        if (l == dimension) break;
    }
}

bool boundary_has(const BoundaryData& b, const Coord& site)
{
    if (const auto* loops = std::get_if<LoopField>(&b)) return loops->contains(site);
    if (const auto* values = std::get_if<ValueField>(&b)) return values->count(site) != 0;
    return false;
}

}  // namespace

EnergyContext::EnergyContext(LatticeBox box, CouplingSpec coupling, PotentialSpec potential, double beta,
                             BoundaryData boundary, std::size_t grid_size)
    : box_(std::move(box)),
      coupling_(std::move(coupling)),
      potential_(std::move(potential)),
      beta_(beta),
      boundary_(std::move(boundary)),
      grid_size_(grid_size)
{
    if (!(beta_ > 0.0) || !std::isfinite(beta_)) throw std::invalid_argument("beta must be positive and finite");
    const std::size_t n = box_.size();
    interior_.resize(n);
    exterior_.resize(n);

    if (is_periodic()) {
        if (potential_.has_overrides())
            throw std::invalid_argument("periodic boundary conditions require a translation-invariant potential");
        for (std::size_t j = 0; j < n; ++j) {
            const Coord cj = box_.coord(j);
            for (std::size_t k = 0; k < n; ++k) {
                if (k == j) continue;
                const double J = coupling_.at_squared_distance(periodic_squared_distance(cj, box_.coord(k), box_));
                if (J != 0.0) interior_[j].push_back({k, J});
            }
        }
        return;
    }

    for (const auto& [site, poly] : potential_.overrides())
        if (!box_.contains(site))
            throw std::invalid_argument("potential override at " + format_coord(site) + " lies outside the box");

    if (const auto* loops = std::get_if<LoopField>(&boundary_)) {
        for (const auto& [site, c] : loops->loops())
            if (box_.contains(site))
                throw std::invalid_argument("boundary loop given at interior site " + format_coord(site));
    }

    const int radius = static_cast<int>(std::floor(std::sqrt(static_cast<double>(coupling_.squared_range()))));
    for (std::size_t j = 0; j < n; ++j) {
        const Coord cj = box_.coord(j);
        if (coupling_.is_zero()) continue;
        for_each_offset(box_.dimension(), radius, [&](const Coord& off) {
            const int rho2 = squared_norm(off);
            if (rho2 == 0) return;
            const double J = coupling_.at_squared_distance(rho2);
            if (J == 0.0) return;
            Coord ck = cj;
            for (std::size_t l = 0; l < ck.size(); ++l) ck[l] += off[l];
            if (auto k = box_.find(ck)) {
                interior_[j].push_back({*k, J});
            } else {
                if (!boundary_has(boundary_, ck))
                    throw std::invalid_argument("missing boundary data at exterior site " + format_coord(ck) +
                                                " within interaction range");
                exterior_[j].push_back({ck, J});
            }
        });
    }
}

std::size_t EnergyContext::grid_size_for(const ModeBasis& basis) const
{
    if (grid_size_ != 0) return grid_size_;
    int half_degree = std::max(potential_.base().degree_half(), 1);
    for (const auto& [site, poly] : potential_.overrides()) half_degree = std::max(half_degree, poly.degree_half());
    return default_grid_size(basis.n_max(), half_degree);
}

std::vector<Coord> EnergyContext::boundary_collar() const
{
    std::set<Coord> collar;
    for (const auto& ext : exterior_)
        for (const auto& e : ext) collar.insert(e.site);
    return {collar.begin(), collar.end()};
}

EnergyContext EnergyContext::with_boundary(BoundaryData boundary) const
{
    return EnergyContext(box_, coupling_, potential_, beta_, std::move(boundary), grid_size_);
}

double EnergyContext::boundary_time_average(const Coord& site) const
{
    if (const auto* loops = std::get_if<LoopField>(&boundary_)) return time_average(loops->at(site), beta_);
    if (const auto* values = std::get_if<ValueField>(&boundary_)) {
        auto it = values->find(site);
        if (it == values->end()) throw std::out_of_range("no boundary value at " + format_coord(site));
        return it->second;
    }
    throw std::logic_error("periodic contexts have no exterior configuration");
}

// ---------------------------------------------------------------------------

EnergyModel EnergyModel::loops(const EnergyContext& ctx, const ModeBasis& basis)
{
    if (basis.beta() != ctx.beta()) throw std::invalid_argument("loop basis and energy context disagree on beta");
    EnergyModel m;
    m.site_dim_ = basis.mode_count();
    m.grid_.emplace(basis, ctx.grid_size_for(basis));
    const auto& box = ctx.box();
    const std::size_t n = box.size();
    m.polys_.reserve(n);
    m.neighbors_.resize(n);
    m.boundary_.assign(n * m.site_dim_, 0.0);
    const double root_beta = std::sqrt(ctx.beta());
    for (std::size_t j = 0; j < n; ++j) {
        m.polys_.push_back(ctx.potential().at(box.coord(j)));
        m.neighbors_[j] = ctx.interior_neighbors(j);
        double* b = m.boundary_.data() + j * m.site_dim_;
        for (const auto& ext : ctx.exterior_neighbors(j)) {
            if (const auto* loops = std::get_if<LoopField>(&ctx.boundary())) {
                if (!(loops->basis() == basis)) throw std::invalid_argument("boundary loops use a different basis");
                auto zeta = loops->at(ext.site);
                for (std::size_t q = 0; q < m.site_dim_; ++q) b[q] += ext.coupling * zeta[q];
            } else {
                // Constant loop y_k has coefficient y_k sqrt(beta) on e_0 only.
                b[0] += ext.coupling * std::get<ValueField>(ctx.boundary()).at(ext.site) * root_beta;
            }
        }
    }
    return m;
}

EnergyModel EnergyModel::classical(const EnergyContext& ctx, double scale)
{
    EnergyModel m;
    m.site_dim_ = 1;
    m.scale_ = scale;
    const auto& box = ctx.box();
    const std::size_t n = box.size();
    m.polys_.reserve(n);
    m.neighbors_.resize(n);
    m.boundary_.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        m.polys_.push_back(ctx.potential().at(box.coord(j)));
        for (const auto& nb : ctx.interior_neighbors(j)) m.neighbors_[j].push_back({nb.site, scale * nb.coupling});
        for (const auto& ext : ctx.exterior_neighbors(j))
            m.boundary_[j] += scale * ext.coupling * ctx.boundary_time_average(ext.site);
    }
    return m;
}

double EnergyModel::onsite_from_path(std::size_t site, std::span<const double> path) const
{
    const Polynomial& U = polys_[site];
    double s = 0.0;
    for (double w : path) s += U(w);
    return s * grid_->spacing();
}

double EnergyModel::onsite(std::size_t site, std::span<const double> c, std::span<double> scratch) const
{
    if (!grid_) return scale_ * polys_[site](c[0]);
    grid_->synthesize(c, scratch.first(grid_->size()));
    return onsite_from_path(site, scratch.first(grid_->size()));
}

double EnergyModel::total(std::span<const double> state) const
{
    std::vector<double> scratch(scratch_size());
    return total(state, scratch);
}

double EnergyModel::total(std::span<const double> state, std::span<double> scratch) const
{
    if (state.size() != sites() * site_dim_) throw std::invalid_argument("state size does not match the energy model");
    double e = 0.0;
    for (std::size_t j = 0; j < sites(); ++j) {
        auto cj = state.subspan(j * site_dim_, site_dim_);
        e += onsite(j, cj, scratch);
        double pair = 0.0;
        for (const auto& nb : neighbors_[j]) pair += nb.coupling * scalar_product(cj, state.subspan(nb.site * site_dim_, site_dim_));
        e += 0.5 * pair + scalar_product(cj, boundary_field(j));
    }
    return e;
}

// ---------------------------------------------------------------------------

EnergyCache::EnergyCache(const EnergyModel& model, std::span<const double> state) : model_(&model)
{
    rebuild(state);
}

double EnergyCache::rebuild(std::span<const double> state)
{
    const std::size_t n = model_->sites(), d = model_->site_dim(), g = model_->scratch_size();
    onsite_.assign(n, 0.0);
    paths_.assign(n * g, 0.0);
    field_.assign(n * d, 0.0);
    std::vector<double> scratch(g);
    double e = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        auto cj = state.subspan(j * d, d);
        if (model_->is_classical()) {
            onsite_[j] = model_->onsite(j, cj, scratch);
        } else {
            std::span<double> path(paths_.data() + j * g, g);
            model_->grid().synthesize(cj, path);
            onsite_[j] = model_->onsite_from_path(j, path);
        }
        auto h = std::span<double>(field_.data() + j * d, d);
        auto b = model_->boundary_field(j);
        std::copy(b.begin(), b.end(), h.begin());
        for (const auto& nb : model_->neighbors(j)) {
            auto ck = state.subspan(nb.site * d, d);
            for (std::size_t q = 0; q < d; ++q) h[q] += nb.coupling * ck[q];
        }
        // onsite + 1/2 <c, h - b> + <c, b> = onsite + 1/2 <c, h + b>
        double s = 0.0;
        for (std::size_t q = 0; q < d; ++q) s += cj[q] * (h[q] + b[q]);
        e += onsite_[j] + 0.5 * s;
    }
    const double drift = std::abs(e - total_);
    total_ = e;
    return drift;
}

double EnergyCache::interaction_delta(std::size_t site, std::span<const double> old_c, std::span<const double> new_c) const
{
    auto h = field(site);
    double s = 0.0;
    for (std::size_t q = 0; q < h.size(); ++q) s += (new_c[q] - old_c[q]) * h[q];
    return s;
}

void EnergyCache::commit(std::size_t site, std::span<const double> old_c, std::span<const double> new_c,
                         std::span<const double> new_path, double new_onsite, double delta)
{
    const std::size_t d = model_->site_dim();
    for (const auto& nb : model_->neighbors(site)) {
        double* h = field_.data() + nb.site * d;
        for (std::size_t q = 0; q < d; ++q) h[q] += nb.coupling * (new_c[q] - old_c[q]);
    }
    if (!model_->is_classical()) {
        const std::size_t g = model_->scratch_size();
        std::copy(new_path.begin(), new_path.end(), paths_.begin() + static_cast<std::ptrdiff_t>(site * g));
    }
    onsite_[site] = new_onsite;
    total_ += delta;
}

// ---------------------------------------------------------------------------

double euclidean_energy(const LoopConfiguration& config, const EnergyContext& ctx)
{
    if (ctx.is_periodic()) throw std::invalid_argument("euclidean_energy needs fixed boundary data; use periodic_euclidean_energy");
    if (!(config.box() == ctx.box())) throw std::invalid_argument("configuration box differs from the context box");
    return EnergyModel::loops(ctx, config.basis()).total(config.data());
}

double classical_energy(std::span<const double> x, const EnergyContext& ctx)
{
    if (ctx.is_periodic()) throw std::invalid_argument("classical_energy needs boundary values; use periodic_classical_energy");
    if (x.size() != ctx.box().size()) throw std::invalid_argument("one value per site required");
    return EnergyModel::classical(ctx, 1.0).total(x);
}

double periodic_euclidean_energy(const LoopConfiguration& config, const EnergyContext& ctx)
{
    if (!ctx.is_periodic()) throw std::invalid_argument("periodic_euclidean_energy requires a periodic context");
    if (!(config.box() == ctx.box())) throw std::invalid_argument("configuration box differs from the context box");
    return EnergyModel::loops(ctx, config.basis()).total(config.data());
}

double periodic_classical_energy(std::span<const double> x, const EnergyContext& ctx)
{
    if (!ctx.is_periodic()) throw std::invalid_argument("periodic_classical_energy requires a periodic context");
    if (x.size() != ctx.box().size()) throw std::invalid_argument("one value per site required");
    return EnergyModel::classical(ctx, 1.0).total(x);
}

}  // namespace loopgibbs
