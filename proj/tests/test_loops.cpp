#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "loopgibbs/loops.hpp"

using namespace loopgibbs;

namespace {
std::vector<double> random_coeffs(std::size_t n, std::mt19937_64& rng)
{
    std::normal_distribution<double> z;
    std::vector<double> c(n);
    for (auto& v : c)
        v = z(rng);
    return c;
}
}  // namespace

TEST_CASE("mode basis layout")
{
    ModeBasis b(2.0, 3);
    CHECK(b.mode_count() == 7);
    CHECK(b.parity(0) == ModeParity::constant);
    CHECK(b.parity(5) == ModeParity::cosine);
    CHECK(b.parity(6) == ModeParity::sine);
    CHECK(b.harmonic(6) == 3);
    CHECK(b.mode_index(2, ModeParity::sine) == 4);
    CHECK(b.frequency(3) == doctest::Approx(2.0 * std::numbers::pi * 2 / 2.0));
    CHECK(b.frequency(4) == doctest::Approx(-2.0 * std::numbers::pi * 2 / 2.0));
    CHECK_THROWS(ModeBasis(0.0, 1));
    CHECK_THROWS(ModeBasis(1.0, 0));
}

TEST_CASE("basis is orthonormal on the grid")
{
    ModeBasis b(1.7, 5);
    EvaluationGrid g(b, 4 * 5);
    std::vector<double> prod(g.size());
    for (std::size_t p = 0; p < b.mode_count(); ++p)
        for (std::size_t q = 0; q < b.mode_count(); ++q) {
            auto ep = g.mode_values(p), eq = g.mode_values(q);
            for (std::size_t i = 0; i < g.size(); ++i)
                prod[i] = ep[i] * eq[i];
            CHECK(g.integrate(prod) == doctest::Approx(p == q ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
        }
}

TEST_CASE("evaluate examples")
{
    ModeBasis b(3.0, 2);
    auto one = evaluate(TemperatureLoop::constant(b, 1.0), 8);
    for (double v : one)
        CHECK(v == doctest::Approx(1.0));
    for (double v : evaluate(TemperatureLoop(b), 8))
        CHECK(v == 0.0);
    CHECK_THROWS(evaluate(TemperatureLoop(b), 7));

    ModeBasis b2(2.0 * std::numbers::pi, 1);
    TemperatureLoop cos1(b2);
    cos1[b2.mode_index(1, ModeParity::cosine)] = 1.0;
    CHECK(evaluate(cos1, 4)[0] == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)));
    CHECK(cos1.value_at(0.0) == doctest::Approx(cos1.value_at(b2.beta())));
}

TEST_CASE("time average examples")
{
    ModeBasis b(4.0, 3);
    CHECK(time_average(TemperatureLoop::constant(b, 5.0)) == doctest::Approx(5.0));
    CHECK(time_average(TemperatureLoop::harmonic(b, 1, ModeParity::cosine, 7.0)) == 0.0);
    TemperatureLoop l(b);
    l[0] = 2.0;
    CHECK(time_average(l) == 1.0);
}

TEST_CASE("equivalence class members")
{
    ModeBasis b(2.0, 2);
    ValueField y{{{-1}, 1.0}, {{1}, 1.0}};
    auto plain = equivalence_class_member(b, y, {});
    std::map<Coord, TemperatureLoop> pert{{{-1}, TemperatureLoop::harmonic(b, 1, ModeParity::cosine, 3.0)},
                                          {{1}, TemperatureLoop::harmonic(b, 2, ModeParity::sine, -2.0)}};
    auto bumped = equivalence_class_member(b, y, pert);
    CHECK(plain.reduce() == bumped.reduce());
    for (const auto& [site, v] : bumped.reduce())
        CHECK(v == doctest::Approx(1.0));
    auto zero = equivalence_class_member(b, {{{0}, 0.0}}, {});
    for (double c : zero.at({0}))
        CHECK(c == 0.0);

    std::map<Coord, TemperatureLoop> bad{{{1}, TemperatureLoop::constant(b, 0.1)}};
    CHECK_THROWS_AS(equivalence_class_member(b, y, bad), std::invalid_argument);
    std::map<Coord, TemperatureLoop> stray{{{5}, TemperatureLoop::harmonic(b, 1, ModeParity::cosine, 1.0)}};
    CHECK_THROWS(equivalence_class_member(b, y, stray));
}

TEST_CASE("constant embedding")
{
    ModeBasis b(4.0, 2);
    const auto box = LatticeBox::from_extents({3});
    std::vector<double> x{1.0, 1.0, 1.0};
    auto cfg = constant_embed(x, b, box);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(cfg.site(j)[0] == 2.0);
        for (std::size_t q = 1; q < b.mode_count(); ++q)
            CHECK(cfg.site(j)[q] == 0.0);
    }
    std::vector<double> z{0.0, 0.0, 0.0};
    const auto zcfg = constant_embed(z, b, box);
    for (double c : zcfg.data())
        CHECK(c == 0.0);

    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        auto xs = random_coeffs(3, rng);
        ModeBasis bt(0.1 + 5.0 * std::abs(xs[0]), 3);
        auto back = time_averages(constant_embed(xs, bt, box));
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(back[j] == doctest::Approx(xs[j]).epsilon(1e-15));
    }
}

TEST_CASE("parseval on random loops")
{
    std::mt19937_64 rng(11);
    for (int n_max : {1, 4, 16}) {
        ModeBasis b(2.5, n_max);
        for (std::size_t grid : {std::size_t(4 * n_max), std::size_t(4 * n_max + 3)}) {
            auto a = random_coeffs(b.mode_count(), rng), c = random_coeffs(b.mode_count(), rng);
            auto pa = evaluate(TemperatureLoop(b, a), grid), pc = evaluate(TemperatureLoop(b, c), grid);
            EvaluationGrid g(b, grid);
            std::vector<double> prod(grid);
            for (std::size_t i = 0; i < grid; ++i)
                prod[i] = pa[i] * pc[i];
            CHECK(std::abs(g.integrate(prod) - scalar_product(a, c)) < 1e-10);
        }
    }
}

TEST_CASE("sup norm dominates the time average")
{
    std::mt19937_64 rng(5);
    ModeBasis b(1.3, 6);
    for (int t = 0; t < 50; ++t) {
        TemperatureLoop l(b, random_coeffs(b.mode_count(), rng));
        CHECK(sup_norm(l, 24) >= std::abs(time_average(l)));
    }
}

TEST_CASE("embedding then projection is the identity")
{
    ModeBasis b(1.0, 2);
    const LatticeBox small({1}, {2});
    const LatticeBox big({0}, {4});
    LoopConfiguration cfg(b, small);
    std::mt19937_64 rng(2);
    auto r = random_coeffs(cfg.data().size(), rng);
    std::copy(r.begin(), r.end(), cfg.data().begin());
    auto up = cfg.embed(big);
    CHECK(up.project(small) == cfg);
    for (double c : up.site(0))
        CHECK(c == 0.0);
    CHECK_THROWS(cfg.embed(LatticeBox({2}, {4})));
}

TEST_CASE("csv dump round trip")
{
    ModeBasis b(1.0, 2);
    const auto box = LatticeBox::from_extents({2, 2});
    LoopConfiguration cfg(b, box);
    std::mt19937_64 rng(9);
    auto r = random_coeffs(cfg.data().size(), rng);
    std::copy(r.begin(), r.end(), cfg.data().begin());
    std::stringstream ss;
    write_csv(ss, cfg);
    CHECK(read_csv(ss, b, box) == cfg);
}
