#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "loopgibbs/lattice.hpp"

using namespace loopgibbs;

TEST_CASE("box index round trip")
{
    LatticeBox box({-1, 0, 2}, {1, 3, 2});
    CHECK(box.size() == 12);
    for (std::size_t i = 0; i < box.size(); ++i)
        CHECK(box.index(box.coord(i)) == i);
    CHECK_THROWS_AS(box.index({2, 0, 2}), std::out_of_range);
    CHECK_THROWS(LatticeBox({0}, {-1}));
}

TEST_CASE("coupling norm")
{
    CHECK(coupling_norm(CouplingSpec::nearest_neighbor(0.5), 1) == doctest::Approx(1.0));
    CHECK(coupling_norm(CouplingSpec::zero(), 3) == 0.0);
    CHECK(coupling_norm(CouplingSpec::nearest_neighbor(1.0), 2) == doctest::Approx(4.0));
    // shells rho^2 = 1 (4 sites), 2 (4 sites)
    CouplingSpec two({{1, 0.5}, {2, -0.25}});
    CHECK(coupling_norm(two, 2) == doctest::Approx(3.0));
    CHECK(two.squared_range() == 2);
    CHECK(two.at_squared_distance(0) == 0.0);
    CHECK(two.at_squared_distance(5) == 0.0);
}

TEST_CASE("coupling monotonicity over shells")
{
    CHECK(CouplingSpec::nearest_neighbor(0.3).is_nonnegative_nonincreasing(2));
    CHECK_FALSE(CouplingSpec::nearest_neighbor(-0.3).is_nonnegative_nonincreasing(1));
    CHECK_FALSE(CouplingSpec({{1, 0.1}, {2, 0.2}}).is_nonnegative_nonincreasing(2));
    // rho^2 = 2 is not a shell in d = 1, so a gap there is irrelevant
    CHECK(CouplingSpec({{1, 0.2}, {4, 0.1}}).is_nonnegative_nonincreasing(1));
    CHECK_FALSE(CouplingSpec({{1, 0.2}, {4, 0.1}}).is_nonnegative_nonincreasing(2));
}

TEST_CASE("stability")
{
    const auto dw = validate_stability(Polynomial{-1.0, {1.0}}, 1.0);
    CHECK(dw.stable);
    CHECK(std::isinf(dw.c_tilde_sup));

    const auto zero = validate_stability(Polynomial{}, 3.0);
    CHECK_FALSE(zero.stable);
    CHECK_FALSE(zero.integrable);

    const auto quad = validate_stability(Polynomial{2.0, {}}, 1.0);
    CHECK(quad.stable);
    CHECK(quad.c_tilde_sup == doctest::Approx(4.0));
    CHECK(quad.witness_c_tilde > 0.0);
    CHECK(quad.witness_c_tilde <= 4.0);
    // witness inequality at a few points
    for (double x : {-3.0, -0.5, 0.0, 1.0, 7.0})
        CHECK(2.0 * x * x >= 0.5 * quad.witness_c_tilde * x * x + quad.witness_b - 1e-12);

    CHECK_FALSE(validate_stability(Polynomial{0.5, {}}, 2.5).stable);  // 2a = 1 <= 1.5
    CHECK_FALSE(validate_stability(Polynomial{1.0, {-1.0}}, 0.0).stable);
}

TEST_CASE("phi4 family")
{
    CHECK(is_phi4_form(Polynomial{-1.0, {1.0}}));
    CHECK(is_phi4_form(Polynomial{0.3, {0.0, 2.0}}));
    CHECK_FALSE(is_phi4_form(Polynomial{1.0, {}}));
    CHECK_FALSE(is_phi4_form(Polynomial{1.0, {-1.0, 1.0}}));
    PotentialSpec pot(Polynomial{-1.0, {1.0}}, true);
    CHECK_THROWS_AS(pot.set_override({0}, Polynomial{1.0, {}}), std::invalid_argument);
    pot.set_override({0}, Polynomial{2.0, {0.5}});
    CHECK(pot.at({0}).a == 2.0);
    CHECK(pot.at({1}).a == -1.0);
    CHECK(pot.satisfies_phi4_form());
}

TEST_CASE("periodic distance examples")
{
    const auto line = LatticeBox::from_extents({4});
    CHECK(periodic_distance({0}, {3}, line) == 1.0);
    CHECK(periodic_distance({2}, {2}, line) == 0.0);
    const auto sq = LatticeBox::from_extents({4, 4});
    CHECK(periodic_distance({0, 0}, {3, 2}, sq) == doctest::Approx(std::sqrt(5.0)));
    CHECK_THROWS(periodic_distance({0, 0}, {4, 0}, sq));
}

TEST_CASE("periodic distance never exceeds euclidean distance")
{
    for (int d = 1; d <= 3; ++d) {
        for (int L = 1; L <= 5; ++L) {
            std::vector<int> ext(static_cast<std::size_t>(d), L);
            LatticeBox box = LatticeBox::from_extents(ext);
            for (std::size_t a = 0; a < box.size(); ++a)
                for (std::size_t b = 0; b < box.size(); ++b) {
                    const Coord j = box.coord(a), k = box.coord(b);
                    REQUIRE(periodic_squared_distance(j, k, box) <= squared_distance(j, k));
                    REQUIRE(periodic_squared_distance(j, k, box) == periodic_squared_distance(k, j, box));
                }
        }
    }
}

TEST_CASE("wrap shift is a bijection")
{
    const auto box = LatticeBox({1, -2}, {3, 1});
    std::vector<int> hit(box.size(), 0);
    for (std::size_t i = 0; i < box.size(); ++i)
        ++hit[box.index(box.wrap_shift(box.coord(i), {5, -1}))];
    for (int h : hit)
        CHECK(h == 1);
}
