#include "loopgibbs/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace loopgibbs {

GaussHermiteRule gauss_hermite(std::size_t n)
{
    if (n == 0) throw std::invalid_argument("Gauss-Hermite rule needs at least one node");
    // Golub-Welsch: Jacobi matrix of the monic He_k recurrence.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 1 ? n - 1 : 0));
    for (std::size_t k = 1; k < n; ++k) sub[static_cast<Eigen::Index>(k - 1)] = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw std::runtime_error("Gauss-Hermite eigensolve failed");
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        rule.nodes[i] = solver.eigenvalues()[idx];
        const double v0 = solver.eigenvectors()(0, idx);
        rule.weights[i] = v0 * v0;
        total += rule.weights[i];
    }
    // Symmetrize to remove eigensolver noise, then renormalize.
    for (std::size_t i = 0; i < n / 2; ++i) {
        const std::size_t k = n - 1 - i;
        const double x = 0.5 * (rule.nodes[k] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[k]);
        rule.nodes[i] = -x;
        rule.nodes[k] = x;
        rule.weights[i] = rule.weights[k] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    total = 0.0;
    for (double w : rule.weights) total += w;
    for (double& w : rule.weights) w /= total;
    return rule;
}

namespace {

struct NodeCounts {
    std::size_t zero;
    std::size_t oscillatory;
    double zero_scale = 1.0;
};

/// All quadrature nodes of one site: coefficient vectors, log prior weights
/// and the site's own energy terms (on-site plus boundary coupling).
struct SiteGrid {
    std::size_t count = 0;
    std::vector<double> coeffs;
    std::vector<double> log_weight;
    std::vector<double> local_energy;
};

void check_loop_cutoff(const GibbsTarget& target)
{
    if (!target.is_classical() && target.basis().n_max() > 2)
        throw std::invalid_argument("oracle quadrature supports loop cutoffs n_max <= 2 only");
}

std::vector<SiteGrid> build_grids(const GibbsTarget& target, const EnergyModel& model, NodeCounts counts)
{
    const auto sd = target.prior_std();
    const std::size_t d = target.site_dim();
    const GaussHermiteRule zero_rule = gauss_hermite(counts.zero);
    const GaussHermiteRule osc_rule = gauss_hermite(counts.oscillatory);
    std::vector<std::size_t> active;
    for (std::size_t q = 0; q < d; ++q)
        if (sd[q] > 0.0) active.push_back(q);

    std::vector<double> scratch(model.scratch_size());
    std::vector<SiteGrid> grids(target.sites());
    for (std::size_t j = 0; j < target.sites(); ++j) {
        SiteGrid& g = grids[j];
        std::vector<std::size_t> idx(active.size(), 0);
        auto rule_of = [&](std::size_t a) -> const GaussHermiteRule& { return active[a] == 0 ? zero_rule : osc_rule; };
        std::vector<double> c(d, 0.0);
        const auto b = model.boundary_field(j);
        while (true) {
            double lw = 0.0;
            std::fill(c.begin(), c.end(), 0.0);
            for (std::size_t a = 0; a < active.size(); ++a) {
                const auto& r = rule_of(a);
                const double z = r.nodes[idx[a]];
                lw += std::log(r.weights[idx[a]]);
                if (active[a] == 0 && counts.zero_scale != 1.0) {
                    const double s = counts.zero_scale;
                    c[0] = s * sd[0] * z;
                    // prior density over the N(0, s^2 sd^2) density of the nodes
                    lw += 0.5 * z * z * (1.0 - s * s) + std::log(s);
                } else {
                    c[active[a]] = sd[active[a]] * z;
                }
            }
            g.coeffs.insert(g.coeffs.end(), c.begin(), c.end());
            g.log_weight.push_back(lw);
            g.local_energy.push_back(model.onsite(j, c, scratch) + scalar_product(c, b));
            ++g.count;
            std::size_t a = 0;
            while (a < active.size() && ++idx[a] == rule_of(a).nodes.size()) idx[a++] = 0;
            if (a == active.size()) break;
        }
    }
    return grids;
}

struct PairTerm {
    std::size_t j;
    std::size_t k;
    double coupling;
};

std::vector<PairTerm> pair_terms(const EnergyModel& model)
{
    std::vector<PairTerm> pairs;
    for (std::size_t j = 0; j < model.sites(); ++j)
        for (const auto& nb : model.neighbors(j))
            if (nb.site > j) pairs.push_back({j, nb.site, nb.coupling});
    return pairs;
}

/// Running sums for sum_i exp(a_i) and sum_i exp(a_i) f_i without overflow.
struct LogSumExp {
    double top = -std::numeric_limits<double>::infinity();
    double z = 0.0;
    std::vector<double> f;

    explicit LogSumExp(std::size_t nf) : f(nf, 0.0) {}

    template <class F>
    void add(double a, F&& value_of)
    {
        if (a > top) {
            const double scale = std::exp(top - a);
            z *= scale;
            for (double& v : f) v *= scale;
            top = a;
        }
        const double w = std::exp(a - top);
        z += w;
        for (std::size_t k = 0; k < f.size(); ++k) f[k] += w * value_of(k);
    }
    double log_z() const { return top + std::log(z); }
    double mean(std::size_t k) const { return f[k] / z; }
};

double total_nodes(const GibbsTarget& target, NodeCounts counts)
{
    double total = 1.0;
    const auto sd = target.prior_std();
    for (std::size_t j = 0; j < target.sites(); ++j)
        for (std::size_t q = 0; q < sd.size(); ++q)
            if (sd[q] > 0.0) total *= static_cast<double>(q == 0 ? counts.zero : counts.oscillatory);
    return total;
}

/// Visits every tensor node: site-local indices, log weight and energy.
template <class Visit>
void for_each_node(const std::vector<SiteGrid>& grids, const std::vector<PairTerm>& pairs, std::size_t d,
                   Visit&& visit)
{
    const std::size_t n = grids.size();
    std::vector<std::size_t> idx(n, 0);
    while (true) {
        double lw = 0.0, e = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            lw += grids[j].log_weight[idx[j]];
            e += grids[j].local_energy[idx[j]];
        }
        for (const auto& p : pairs) {
            const double* a = grids[p.j].coeffs.data() + idx[p.j] * d;
            const double* b = grids[p.k].coeffs.data() + idx[p.k] * d;
            double s = 0.0;
            for (std::size_t q = 0; q < d; ++q) s += a[q] * b[q];
            e += p.coupling * s;
        }
        visit(idx, lw, e);
        std::size_t j = 0;
        while (j < n && ++idx[j] == grids[j].count) idx[j++] = 0;
        if (j == n) break;
    }
}

struct QuadratureResult {
    double log_z;
    std::vector<double> means;
};

QuadratureResult quadrature(const GibbsTarget& target, std::span<const Observable> fs, NodeCounts counts)
{
    const EnergyModel model = target.energy_model();
    const auto grids = build_grids(target, model, counts);
    const auto pairs = pair_terms(model);
    const std::size_t d = target.site_dim();
    std::vector<double> state(target.state_size(), 0.0);
    LogSumExp acc(fs.size());
    for_each_node(grids, pairs, d, [&](const std::vector<std::size_t>& idx, double lw, double e) {
        if (!fs.empty())
            for (std::size_t j = 0; j < grids.size(); ++j)
                std::copy_n(grids[j].coeffs.begin() + static_cast<std::ptrdiff_t>(idx[j] * d), d,
                            state.begin() + static_cast<std::ptrdiff_t>(j * d));
        const SampleView view = target.view(state);
        acc.add(lw - e, [&](std::size_t k) { return fs[k](view); });
    });
    QuadratureResult r{acc.log_z(), {}};
    for (std::size_t k = 0; k < fs.size(); ++k) r.means.push_back(acc.mean(k));
    return r;
}

NodeCounts base_counts(const QuadratureOptions& o)
{
    return {o.nodes, o.oscillatory_nodes ? o.oscillatory_nodes : o.nodes, o.zero_node_scale};
}

NodeCounts refined_counts(const QuadratureOptions& o)
{
    const std::size_t osc = o.oscillatory_nodes ? o.oscillatory_nodes : o.nodes;
    return {o.refined_nodes,
            o.refined_oscillatory_nodes ? o.refined_oscillatory_nodes : (o.oscillatory_nodes ? (3 * osc + 1) / 2 : o.refined_nodes),
            o.zero_node_scale};
}

void check_budget(const GibbsTarget& target, const QuadratureOptions& opts, NodeCounts counts)
{
    check_loop_cutoff(target);
    if (!(opts.zero_node_scale > 0.0 && opts.zero_node_scale <= 1.0))
        throw std::invalid_argument("zero-mode node scale must lie in (0, 1]");
    const std::size_t dims = oracle_dimensions(target);
    if (dims > opts.max_dimensions)
        throw std::invalid_argument("oracle dimension guard: " + std::to_string(dims) + " dimensions exceed the limit of " +
                                    std::to_string(opts.max_dimensions));
    if (total_nodes(target, counts) > opts.max_total_nodes)
        throw std::invalid_argument("oracle node budget exceeded; reduce the oscillatory node count");
}

/// Base quadrature plus the refinement comparison.
std::vector<OracleEstimate> with_self_check(const GibbsTarget& target, std::span<const Observable> fs,
                                            const QuadratureOptions& opts, bool log_partition)
{
    const NodeCounts base = base_counts(opts);
    check_budget(target, opts, base);
    const auto values = [&](const QuadratureResult& r) {
        return log_partition ? std::vector<double>{r.log_z} : r.means;
    };
    const auto first = values(quadrature(target, fs, base));
    std::vector<OracleEstimate> out(first.size());
    const std::size_t dims = oracle_dimensions(target);
    for (std::size_t k = 0; k < first.size(); ++k) {
        out[k].value = first[k];
        out[k].dimensions = dims;
        out[k].refinement_change = std::numeric_limits<double>::quiet_NaN();
    }
    if (!opts.self_check) return out;
    const NodeCounts fine = refined_counts(opts);
    if (total_nodes(target, fine) > opts.max_total_nodes) {
        for (auto& o : out) o.warnings.push_back("self-check skipped: refined grid exceeds the node budget");
        return out;
    }
    const auto second = values(quadrature(target, fs, fine));
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k].refinement_change = std::abs(second[k] - first[k]);
        if (!(out[k].refinement_change < opts.self_check_tolerance)) {
            out[k].self_check_passed = false;
            out[k].warnings.push_back("self-check failed: refinement moved the result by " +
                                      std::to_string(out[k].refinement_change));
        }
    }
    return out;
}

}  // namespace

std::size_t oracle_dimensions(const GibbsTarget& target)
{
    const auto sd = target.prior_std();
    const auto active = static_cast<std::size_t>(std::count_if(sd.begin(), sd.end(), [](double s) { return s > 0.0; }));
    return active * target.sites();
}

std::vector<OracleEstimate> oracle_expectations(const GibbsTarget& target, std::span<const Observable> fs,
                                                const QuadratureOptions& opts)
{
    return with_self_check(target, fs, opts, false);
}

OracleEstimate oracle_expectation(const GibbsTarget& target, const Observable& f, const QuadratureOptions& opts)
{
    return oracle_expectations(target, std::span<const Observable>(&f, 1), opts).front();
}

OracleEstimate oracle_log_partition(const GibbsTarget& target, const QuadratureOptions& opts)
{
    return with_self_check(target, {}, opts, true).front();
}

double oracle_consistency(const GibbsTarget& outer, const LatticeBox& inner, const Observable& f,
                          const QuadratureOptions& opts)
{
    const auto& ctx = outer.context();
    if (ctx.is_periodic()) throw std::invalid_argument("consistency is defined for fixed boundary data only");
    if (!ctx.box().contains(inner)) throw std::invalid_argument("inner box must lie inside the outer box");
    const NodeCounts counts = base_counts(opts);
    check_budget(outer, opts, counts);

    const EnergyModel model = outer.energy_model();
    const auto grids = build_grids(outer, model, counts);
    const auto pairs = pair_terms(model);
    const std::size_t d = outer.site_dim();
    const LatticeBox& box = ctx.box();

    std::vector<std::size_t> rest;  // outer sites outside the inner box
    for (std::size_t j = 0; j < box.size(); ++j)
        if (!inner.contains(box.coord(j))) rest.push_back(j);

    PotentialSpec inner_potential(ctx.potential().base(), ctx.potential().phi4_family());
    for (const auto& [site, poly] : ctx.potential().overrides())
        if (inner.contains(site)) inner_potential.set_override(site, poly);
    const std::size_t grid_size = outer.is_classical() ? ctx.grid_size() : ctx.grid_size_for(outer.basis());

    // Inner kernel value for every node of the sites outside the inner box.
    auto rest_key = [&](const std::vector<std::size_t>& idx) {
        std::size_t key = 0;
        for (std::size_t r : rest) key = key * grids[r].count + idx[r];
        return key;
    };
    std::map<std::size_t, double> inner_value;
    auto inner_expectation = [&](const std::vector<std::size_t>& idx) {
        BoundaryData boundary;
        if (outer.is_classical()) {
            ValueField y;
            if (const auto* v = std::get_if<ValueField>(&ctx.boundary())) y = *v;
            else y = std::get<LoopField>(ctx.boundary()).reduce();
            for (std::size_t r : rest) y[box.coord(r)] = grids[r].coeffs[idx[r]];
            boundary = std::move(y);
        } else {
            LoopField zeta(outer.basis());
            if (const auto* v = std::get_if<ValueField>(&ctx.boundary())) zeta = LoopField::from_values(outer.basis(), *v);
            else zeta = std::get<LoopField>(ctx.boundary());
            for (std::size_t r : rest) {
                const auto* c = grids[r].coeffs.data() + idx[r] * d;
                zeta.set(box.coord(r), std::vector<double>(c, c + d));
            }
            boundary = std::move(zeta);
        }
        EnergyContext inner_ctx(inner, ctx.coupling(), inner_potential, ctx.beta(), std::move(boundary), grid_size);
        GibbsTarget inner_target(std::move(inner_ctx), outer.kind(),
                                 outer.is_classical() ? std::nullopt : std::optional<ModeBasis>(outer.basis()),
                                 outer.mass());
        return quadrature(inner_target, std::span<const Observable>(&f, 1), counts).means.front();
    };

    std::vector<double> state(outer.state_size(), 0.0);
    LogSumExp acc(2);
    for_each_node(grids, pairs, d, [&](const std::vector<std::size_t>& idx, double lw, double e) {
        const std::size_t key = rest_key(idx);
        auto it = inner_value.find(key);
        if (it == inner_value.end()) it = inner_value.emplace(key, inner_expectation(idx)).first;
        for (std::size_t j = 0; j < grids.size(); ++j)
            std::copy_n(grids[j].coeffs.begin() + static_cast<std::ptrdiff_t>(idx[j] * d), d,
                        state.begin() + static_cast<std::ptrdiff_t>(j * d));
        const SampleView view = outer.view(state);
        const double nested = it->second;
        acc.add(lw - e, [&](std::size_t k) { return k == 0 ? nested : f(view); });
    });
    return std::abs(acc.mean(0) - acc.mean(1));
}

double consistency_gap(const GibbsTarget& outer, const LatticeBox& inner, const Observable& f,
                       const QuadratureOptions& opts)
{
    return oracle_consistency(outer, inner, f, opts);
}

}  // namespace loopgibbs
