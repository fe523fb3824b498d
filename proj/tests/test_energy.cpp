#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "loopgibbs/energy.hpp"

using namespace loopgibbs;

namespace {
const Polynomial kDoubleWell{-1.0, {1.0}};

void fill_random(std::span<double> v, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> z(0.0, scale);
    for (auto& x : v)
        x = z(rng);
}

// Exterior sites within range of a 2-d box.
std::vector<Coord> collar2(const LatticeBox& box, const CouplingSpec& j)
{
    std::vector<Coord> out;
    const int r = static_cast<int>(std::ceil(j.range()));
    for (int a = box.lower()[0] - r; a <= box.upper()[0] + r; ++a)
        for (int c = box.lower()[1] - r; c <= box.upper()[1] + r; ++c) {
            const Coord k{a, c};
            if (box.contains(k)) continue;
            for (std::size_t i = 0; i < box.size(); ++i)
                if (squared_distance(box.coord(i), k) <= j.squared_range()) {
                    out.push_back(k);
                    break;
                }
        }
    return out;
}
}  // namespace

TEST_CASE("context validation")
{
    const auto box = LatticeBox::from_extents({2});
    const auto j = CouplingSpec::nearest_neighbor(0.5);
    CHECK_THROWS_AS(EnergyContext(box, j, PotentialSpec(kDoubleWell), 1.0, ValueField{{{-1}, 0.0}}),
                    std::invalid_argument);
    EnergyContext ok(box, j, PotentialSpec(kDoubleWell), 1.0, ValueField{{{-1}, 0.0}, {{2}, 0.0}});
    CHECK(ok.boundary_collar() == std::vector<Coord>{{-1}, {2}});
    const auto sq = LatticeBox::from_extents({2, 2});
    const CouplingSpec diag({{1, 0.1}, {2, 0.05}});
    ValueField all;
    for (const Coord& c : collar2(sq, diag))
        all[c] = 1.0;
    CHECK(EnergyContext(sq, diag, PotentialSpec(), 1.0, all).boundary_collar().size() == all.size());
    CHECK_THROWS(EnergyContext(box, j, PotentialSpec(kDoubleWell), 0.0, PeriodicBoundary{}));
    PotentialSpec over(kDoubleWell);
    over.set_override({1}, Polynomial{0.5, {1.0}});
    CHECK_THROWS(EnergyContext(box, j, over, 1.0, PeriodicBoundary{}));
}

TEST_CASE("euclidean energy examples")
{
    const double beta = 2.0 * std::numbers::pi;
    ModeBasis b(beta, 3);
    const auto one = LatticeBox::single({0});

    // U(x) = x^2, cos n=1 of amplitude A: int U = A^2
    EnergyContext quad(one, CouplingSpec::zero(), PotentialSpec(Polynomial{1.0, {}}), beta, ValueField{});
    for (double amp : {0.5, 2.0}) {
        LoopConfiguration cfg(b, one);
        cfg.site(0)[b.mode_index(1, ModeParity::cosine)] = amp;
        CHECK(euclidean_energy(cfg, quad) == doctest::Approx(amp * amp).epsilon(1e-12));
    }

    // omega = 0 with U(0) = 0 gives zero for any zeta
    const auto j = CouplingSpec::nearest_neighbor(0.7);
    LoopField zeta(b);
    zeta.set({-1}, TemperatureLoop::harmonic(b, 2, ModeParity::sine, 3.0));
    zeta.set({1}, TemperatureLoop::constant(b, -1.5));
    EnergyContext dw(one, j, PotentialSpec(kDoubleWell), beta, zeta);
    CHECK(euclidean_energy(LoopConfiguration(b, one), dw) == 0.0);
}

TEST_CASE("constant loops reduce to the classical energy")
{
    std::mt19937_64 rng(4);
    const auto box = LatticeBox({0, 0}, {1, 2});
    const CouplingSpec j({{1, 0.4}, {2, 0.15}});
    std::vector<double> x(box.size());
    for (double beta : {0.5, 2.0, 7.0}) {
        ModeBasis b(beta, 2);
        fill_random(x, rng);
        ValueField y;
        for (const Coord& c : collar2(box, j))
            y[c] = std::normal_distribution<double>()(rng);
        EnergyContext red(box, j, PotentialSpec(kDoubleWell), beta, y);
        EnergyContext full(box, j, PotentialSpec(kDoubleWell), beta, LoopField::from_values(b, y));
        const double e = euclidean_energy(constant_embed(x, b, box), full);
        CHECK(e == doctest::Approx(beta * classical_energy(x, red)).epsilon(1e-12));

        // any member of the class of y gives the same energy for constant omega
        std::map<Coord, TemperatureLoop> pert;
        for (const auto& [site, v] : y)
            pert.emplace(site, TemperatureLoop::harmonic(b, 1 + (site[1] & 1), ModeParity::cosine, 5.0 * v));
        EnergyContext bumped(box, j, PotentialSpec(kDoubleWell), beta, equivalence_class_member(b, y, pert));
        CHECK(euclidean_energy(constant_embed(x, b, box), bumped) == doctest::Approx(e).epsilon(1e-13));
        // and a loop-valued context reduces for the classical functional
        CHECK(classical_energy(x, bumped) == doctest::Approx(classical_energy(x, red)).epsilon(1e-13));
    }
}

TEST_CASE("classical energy examples")
{
    const auto one = LatticeBox::single({0});
    const double j0 = 0.3;
    EnergyContext ctx(one, CouplingSpec::nearest_neighbor(j0), PotentialSpec(kDoubleWell), 1.0,
                      ValueField{{{-1}, 1.0}, {{1}, 1.0}});
    std::vector<double> zero{0.0};
    CHECK(classical_energy(zero, ctx) == 0.0);
    for (double x : {-1.3, 0.2, 2.0}) {
        std::vector<double> v{x};
        CHECK(classical_energy(v, ctx) == doctest::Approx(kDoubleWell(x) + 2.0 * j0 * x));
    }
    // pair term: 1/2 sum_{j != k} J_jk x_j x_k counts each bond once
    EnergyContext pair(LatticeBox::from_extents({2}), CouplingSpec::nearest_neighbor(j0), PotentialSpec(), 1.0,
                       ValueField{{{-1}, 0.0}, {{2}, 0.0}});
    std::vector<double> xy{1.5, -2.0};
    CHECK(classical_energy(xy, pair) == doctest::Approx(j0 * 1.5 * -2.0));
}

TEST_CASE("periodic energies")
{
    std::mt19937_64 rng(8);
    const auto torus = LatticeBox::from_extents({3, 2});
    const CouplingSpec j({{1, 0.25}, {2, 0.1}});
    const double beta = 1.5;
    ModeBasis b(beta, 3);
    EnergyContext ctx(torus, j, PotentialSpec(kDoubleWell), beta, PeriodicBoundary{});

    CHECK(periodic_euclidean_energy(LoopConfiguration(b, torus), ctx) == 0.0);
    std::vector<double> x0(torus.size(), 0.0);
    CHECK(periodic_classical_energy(x0, ctx) == 0.0);

    double jsum = 0.0;
    for (std::size_t a = 0; a < torus.size(); ++a)
        for (std::size_t c = 0; c < torus.size(); ++c)
            if (a != c)
                jsum += j.at_squared_distance(periodic_squared_distance(torus.coord(a), torus.coord(c), torus));
    for (double x : {-0.8, 1.1}) {
        std::vector<double> u(torus.size(), x);
        const double expect =
            beta * (static_cast<double>(torus.size()) * kDoubleWell(x) + 0.5 * x * x * jsum);
        CHECK(periodic_euclidean_energy(constant_embed(u, b, torus), ctx) == doctest::Approx(expect).epsilon(1e-12));
    }

    std::vector<double> x(torus.size());
    fill_random(x, rng);
    CHECK(beta * periodic_classical_energy(x, ctx) ==
          doctest::Approx(periodic_euclidean_energy(constant_embed(x, b, torus), ctx)).epsilon(1e-12));

    LoopConfiguration cfg(b, torus);
    fill_random(cfg.data(), rng, 0.7);
    const double e = periodic_euclidean_energy(cfg, ctx);
    const double ec = periodic_classical_energy(x, ctx);
    for (const Coord& shift : {Coord{1, 0}, Coord{2, 1}, Coord{0, 1}}) {
        LoopConfiguration moved(b, torus);
        std::vector<double> xm(torus.size());
        for (std::size_t i = 0; i < torus.size(); ++i) {
            const std::size_t k = torus.index(torus.wrap_shift(torus.coord(i), shift));
            std::copy(cfg.site(i).begin(), cfg.site(i).end(), moved.site(k).begin());
            xm[k] = x[i];
        }
        CHECK(periodic_euclidean_energy(moved, ctx) == doctest::Approx(e).epsilon(1e-12));
        CHECK(periodic_classical_energy(xm, ctx) == doctest::Approx(ec).epsilon(1e-12));
    }
    CHECK_THROWS(euclidean_energy(cfg, ctx));
    CHECK_THROWS(classical_energy(x, ctx));
}

TEST_CASE("onsite quadrature is exact above the degree threshold")
{
    std::mt19937_64 rng(21);
    const Polynomial sextic{0.5, {-0.2, 0.1}};  // p = 3
    for (int n_max : {2, 5, 9}) {
        ModeBasis b(2.2, n_max);
        const auto one = LatticeBox::single({0});
        const std::size_t n0 = static_cast<std::size_t>(2 * 3 * n_max + 1);
        EnergyContext c1(one, CouplingSpec::zero(), PotentialSpec(sextic), 2.2, ValueField{}, n0);
        EnergyContext c2(one, CouplingSpec::zero(), PotentialSpec(sextic), 2.2, ValueField{}, 2 * n0);
        LoopConfiguration cfg(b, one);
        fill_random(cfg.data(), rng, 0.6);
        CHECK(std::abs(euclidean_energy(cfg, c1) - euclidean_energy(cfg, c2)) < 1e-9);
    }
    CHECK(default_grid_size(64, 2) == 257);
    CHECK(default_grid_size(3, 1) == 12);
}

TEST_CASE("pair and boundary terms match grid quadrature")
{
    std::mt19937_64 rng(13);
    const double beta = 1.3;
    ModeBasis b(beta, 4);
    const auto box = LatticeBox::from_extents({3});
    const double j0 = 0.45;
    LoopField zeta(b);
    for (const Coord& c : {Coord{-1}, Coord{3}}) {
        std::vector<double> v(b.mode_count());
        fill_random(v, rng);
        zeta.set(c, v);
    }
    EnergyContext ctx(box, CouplingSpec::nearest_neighbor(j0), PotentialSpec(), beta, zeta);
    LoopConfiguration cfg(b, box);
    fill_random(cfg.data(), rng);

    EvaluationGrid g(b, 40);
    auto path = [&](std::span<const double> c) {
        std::vector<double> out(g.size());
        g.synthesize(c, out);
        return out;
    };
    auto integral = [&](const std::vector<double>& p, const std::vector<double>& q) {
        std::vector<double> prod(p.size());
        for (std::size_t i = 0; i < p.size(); ++i)
            prod[i] = p[i] * q[i];
        return g.integrate(prod);
    };
    std::vector<std::vector<double>> w;
    for (std::size_t i = 0; i < 3; ++i)
        w.push_back(path(cfg.site(i)));
    const double grid_energy = j0 * (integral(w[0], w[1]) + integral(w[1], w[2])) +
                               j0 * (integral(w[0], path(zeta.at({-1}))) + integral(w[2], path(zeta.at({3}))));
    CHECK(std::abs(euclidean_energy(cfg, ctx) - grid_energy) < 1e-10);
}

TEST_CASE("incremental cache agrees with full recomputation")
{
    std::mt19937_64 rng(31);
    const double beta = 2.0;
    ModeBasis b(beta, 3);
    const auto box = LatticeBox::from_extents({2, 2});
    ValueField y;
    for (const Coord& c : {Coord{-1, 0}, Coord{-1, 1}, Coord{2, 0}, Coord{2, 1}, Coord{0, -1}, Coord{1, -1},
                           Coord{0, 2}, Coord{1, 2}})
        y[c] = 0.3;
    EnergyContext ctx(box, CouplingSpec::nearest_neighbor(0.2), PotentialSpec(kDoubleWell), beta,
                      LoopField::from_values(b, y));
    const auto model = EnergyModel::loops(ctx, b);
    LoopConfiguration cfg(b, box);
    fill_random(cfg.data(), rng);
    std::vector<double> state(cfg.data().begin(), cfg.data().end());
    EnergyCache cache(model, state);
    CHECK(cache.total() == doctest::Approx(euclidean_energy(cfg, ctx)).epsilon(1e-12));

    std::vector<double> scratch(model.scratch_size()), path(model.scratch_size());
    const std::size_t d = model.site_dim();
    for (int t = 0; t < 50; ++t) {
        const std::size_t s = static_cast<std::size_t>(t) % box.size();
        std::vector<double> old_c(state.begin() + s * d, state.begin() + (s + 1) * d), new_c(d);
        fill_random(new_c, rng);
        model.grid().synthesize(new_c, path);
        const double on = model.onsite_from_path(s, path);
        const double delta = on - cache.onsite(s) + cache.interaction_delta(s, old_c, new_c);
        cache.commit(s, old_c, new_c, path, on, delta);
        std::copy(new_c.begin(), new_c.end(), state.begin() + s * d);
    }
    CHECK(cache.rebuild(state) < 1e-10);
    CHECK(model.total(state, scratch) == doctest::Approx(cache.total()).epsilon(1e-13));
}
