#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "loopgibbs/gibbs.hpp"
#include "loopgibbs/observables.hpp"
#include "loopgibbs/oracle.hpp"

using namespace loopgibbs;

namespace {
const Polynomial kDoubleWell{-1.0, {1.0}};
const Polynomial kQuartic{0.5, {0.5}};

EnergyContext one_site(const Polynomial& u, double beta, double j0, double y_left, double y_right)
{
    return EnergyContext(LatticeBox::single({0}), CouplingSpec::nearest_neighbor(j0), PotentialSpec(u), beta,
                         ValueField{{{-1}, y_left}, {{1}, y_right}});
}

EnergyContext free_site(double beta)
{
    return EnergyContext(LatticeBox::single({0}), CouplingSpec::zero(), PotentialSpec(), beta, ValueField{});
}

Observable mode_square(std::size_t q)
{
    return {"c" + std::to_string(q) + "^2", [q](const SampleView& s) { return s.site(0)[q] * s.site(0)[q]; }};
}

McParams small_mc(std::size_t samples, std::uint64_t seed)
{
    McParams mc;
    mc.chain.burn_in = 1000;
    mc.chain.samples = samples;
    mc.chains = 4;
    mc.seed = seed;
    mc.workers = 1;
    return mc;
}

bool within(const EstimateWithError& e, double exact, double sigmas = 3.0)
{
    return std::abs(e.value - exact) <= sigmas * e.std_error;
}
}  // namespace

TEST_CASE("target kinds")
{
    ModeBasis b(2.0, 2);
    const auto ctx = one_site(kDoubleWell, 2.0, 0.5, 0.0, 0.0);
    CHECK(GibbsTarget::loops(ctx, b, Mass(1.0)).kind() == TargetKind::quantum);
    CHECK(GibbsTarget::loops(ctx, b, Mass::infinity()).kind() == TargetKind::quasiclassical);
    CHECK(GibbsTarget::classical(ctx).kind() == TargetKind::classical);
    CHECK_THROWS(GibbsTarget(ctx, TargetKind::quasiclassical, b, Mass(1.0)));
    CHECK_THROWS(GibbsTarget(ctx, TargetKind::quantum_periodic, b, Mass(1.0)));
    CHECK_THROWS(GibbsTarget::loops(ctx, ModeBasis(3.0, 2), Mass(1.0)));
    const auto qc = GibbsTarget::loops(ctx, b, Mass::infinity());
    CHECK(qc.prior_std()[0] == 1.0);
    for (std::size_t q = 1; q < b.mode_count(); ++q)
        CHECK(qc.prior_std()[q] == 0.0);
    CHECK(GibbsTarget::classical(ctx).prior_std()[0] == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("free chain reproduces the prior spectrum")
{
    const double beta = 2.0;
    ModeBasis b(beta, 2);
    const auto target = GibbsTarget::loops(free_site(beta), b, Mass(0.3));
    std::vector<Observable> fs;
    for (std::size_t q = 0; q < b.mode_count(); ++q)
        fs.push_back(mode_square(q));
    const auto est = expectations(target, fs, small_mc(20000, 5));
    CovarianceSpectrum s(b, Mass(0.3));
    for (std::size_t q = 0; q < b.mode_count(); ++q) {
        CAPTURE(q);
        CHECK(within(est[q], s.eigenvalue(q)));
        CHECK(est[q].std_error >= 0.0);
        CHECK(est[q].ess <= static_cast<double>(est[q].samples));
    }
}

TEST_CASE("quasiclassical chains stay on constant loops")
{
    ModeBasis b(2.0, 4);
    for (MoveKind move : {MoveKind::site, MoveKind::global}) {
        ChainParams p;
        p.burn_in = 300;
        p.samples = 2000;
        p.move = move;
        const auto target = GibbsTarget::loops(one_site(kDoubleWell, 2.0, 0.5, 0.3, -1.0), b, Mass::infinity());
        std::size_t seen = 0;
        run_chain(target, p, 77, [&](std::span<const double> st) {
            ++seen;
            for (std::size_t q = 1; q < b.mode_count(); ++q)
                REQUIRE(st[q] == 0.0);
        });
        CHECK(seen == 2000);
    }
    Chain c(GibbsTarget::loops(free_site(2.0), ModeBasis(2.0, 1), Mass::infinity()), ChainParams{}, 1);
    std::vector<double> bad{0.1, 0.2, 0.0};
    CHECK_THROWS(c.set_state(bad));
}

TEST_CASE("quartic site matches the oracle")
{
    const double beta = 2.0;
    ModeBasis b(beta, 2);
    const auto ctx = one_site(kQuartic, beta, 0.3, 0.5, -0.2);
    const auto target = GibbsTarget::loops(ctx, b, Mass(1.0));
    const std::vector<Observable> fs{clipped_average_moment(2, 10.0), tanh_time_average({0})};
    const auto mc = expectations(target, fs, small_mc(20000, 11));
    QuadratureOptions q;
    q.nodes = 30;
    q.self_check = false;
    const auto exact = oracle_expectations(target, fs, q);
    for (std::size_t i = 0; i < fs.size(); ++i) {
        CAPTURE(fs[i].name);
        CHECK(within(mc[i], exact[i].value));
    }
}

TEST_CASE("kernel expectations of trivial observables")
{
    ModeBasis b(1.0, 2);
    LoopField zeta(b);
    zeta.set({-1}, TemperatureLoop::harmonic(b, 1, ModeParity::sine, 2.0));
    zeta.set({1}, TemperatureLoop::constant(b, 0.7));
    EnergyContext ctx(LatticeBox::single({0}), CouplingSpec::nearest_neighbor(0.4), PotentialSpec(kDoubleWell), 1.0,
                      zeta);
    const auto target = GibbsTarget::loops(ctx, b, Mass(2.0));
    auto one = expectation(target, constant_observable(1.0), small_mc(500, 1));
    CHECK(one.value == 1.0);
    CHECK(one.std_error == 0.0);
    Observable outside{"zeta(1)", [](const SampleView& s) { return s.path_value(Coord{1}, 0.0) + s.time_average(Coord{-1}); }};
    auto ext = expectation(target, outside, small_mc(500, 1));
    CHECK(ext.value == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("classical kernel")
{
    const double beta = 0.5;
    auto g1 = classical_kernel_expectation(one_site(kDoubleWell, beta, 0.2, 0.0, 0.0), constant_observable(1.0),
                                           small_mc(500, 2));
    CHECK(g1.value == 1.0);

    // odd g, even U, y = 0
    const auto box = LatticeBox::from_extents({2});
    EnergyContext pair(box, CouplingSpec::nearest_neighbor(0.3), PotentialSpec(kDoubleWell), beta,
                       ValueField{{{-1}, 0.0}, {{2}, 0.0}});
    Observable odd{"x0+x1^3", [](const SampleView& s) { return s.site(0)[0] + std::pow(s.site(1)[0], 3); }};
    auto sym = classical_kernel_expectation(pair, odd, small_mc(10000, 3));
    CHECK(within(sym, 0.0));

    const auto ctx = one_site(kDoubleWell, 2.0, 0.5, -0.5, -0.5);
    Observable tanh_x{"tanh x", [](const SampleView& s) { return std::tanh(s.site(0)[0]); }};
    auto mc = classical_kernel_expectation(ctx, tanh_x, small_mc(20000, 4));
    QuadratureOptions q;
    q.zero_node_scale = 0.5;
    auto exact = oracle_expectation(GibbsTarget::classical(ctx), tanh_x, q);
    CHECK(exact.self_check_passed);
    CHECK(within(mc, exact.value));
}

TEST_CASE("log partition estimates")
{
    ModeBasis b(2.0, 2);
    auto zero = log_partition_estimate(GibbsTarget::loops(free_site(2.0), b, Mass(1.0)), 1000, 3);
    CHECK(zero.value == 0.0);
    CHECK(zero.std_error == 0.0);

    const double beta = 1.5;
    EnergyContext quad(LatticeBox::single({0}), CouplingSpec::zero(), PotentialSpec(Polynomial{1.0, {}}), beta,
                       ValueField{});
    auto y = log_partition_estimate(GibbsTarget::classical(quad), 100000, 9);
    CHECK(within(y, -0.5 * std::log(3.0)));
    CHECK(y.flags.empty());
    QuadratureOptions q;
    q.self_check = false;
    CHECK(oracle_log_partition(GibbsTarget::classical(quad), q).value == doctest::Approx(-0.5 * std::log(3.0)).epsilon(1e-12));

    // Z^qc(zeta) = Y(y) for zeta in the class of y
    const ValueField yv{{{-1}, 0.4}, {{1}, -0.9}};
    std::map<Coord, TemperatureLoop> pert{{{1}, TemperatureLoop::harmonic(b, 2, ModeParity::cosine, 1.3)}};
    EnergyContext red(LatticeBox::single({0}), CouplingSpec::nearest_neighbor(0.5), PotentialSpec(kDoubleWell), 2.0, yv);
    const auto qc = GibbsTarget::loops(red.with_boundary(equivalence_class_member(b, yv, pert)), b, Mass::infinity());
    q.zero_node_scale = 0.5;
    CHECK(oracle_log_partition(qc, q).value ==
          doctest::Approx(oracle_log_partition(GibbsTarget::classical(red), q).value).epsilon(1e-12));

    // far from the prior: flagged
    EnergyContext steep(LatticeBox::single({0}), CouplingSpec::zero(), PotentialSpec(Polynomial{0.0, {0.0, 0.0, 200.0}}),
                        0.2, ValueField{});
    auto bad = log_partition_estimate(GibbsTarget::classical(steep), 200, 1);
    CHECK_FALSE(bad.flags.empty());
}

TEST_CASE("quasiclassical observables reduce to classical ones")
{
    const auto g = quasiclassical_to_classical(tanh_time_average({0}));
    const auto ctx = one_site(kDoubleWell, 3.0, 0.5, 0.0, 0.0);
    for (double x : {-1.2, 0.0, 0.8}) {
        std::vector<double> v{x};
        CHECK(g(SampleView(ctx, v)) == doctest::Approx(std::tanh(x)).epsilon(1e-14));
    }
    std::vector<double> v{0.3};
    CHECK(quasiclassical_to_classical(constant_observable(2.5))(SampleView(ctx, v)) == 2.5);
    CHECK_THROWS_AS(quasiclassical_to_classical(clipped_path_value({0})), std::invalid_argument);

    // MCMC: quasiclassical f vs classical g, 1 site
    const double beta = 2.0;
    ModeBasis b(beta, 2);
    const auto c2 = one_site(kDoubleWell, beta, 0.5, 0.3, 0.3);
    const auto f = tanh_time_average({0});
    auto qc = expectation(GibbsTarget::loops(c2, b, Mass::infinity()), f, small_mc(20000, 21));
    auto cl = classical_kernel_expectation(c2, quasiclassical_to_classical(f), small_mc(20000, 22));
    CHECK(std::abs(z_score(qc.value, qc.std_error, cl.value, cl.std_error)) < 3.0);
}

TEST_CASE("stability gate")
{
    EnergyContext neg(LatticeBox::single({0}), CouplingSpec::zero(), PotentialSpec(Polynomial{-1.0, {}}), 1.0,
                      ValueField{});
    CHECK_THROWS_AS(require_sampleable(GibbsTarget::classical(neg)), std::invalid_argument);
    CHECK_THROWS(run_chain(GibbsTarget::classical(neg), ChainParams{}, 1, [](std::span<const double>) {}));
    CHECK_NOTHROW(require_sampleable(GibbsTarget::classical(free_site(1.0))));
}

TEST_CASE("step tuning and energy drift")
{
    ModeBasis b(6.0, 3);
    const auto target = GibbsTarget::loops(one_site(Polynomial{-4.0, {4.0}}, 6.0, 0.5, 0.1, 0.1), b, Mass(0.05));
    ChainParams p;
    p.burn_in = 2000;
    p.check_interval = 100;
    Chain c(target, p, 4);
    CHECK_FALSE(c.tuned());
    c.burn_in();
    CHECK(c.tuned());
    CHECK(c.block_count() == 2);
    for (int i = 0; i < 1000; ++i)
        c.sweep();
    CHECK_NOTHROW(c.check_energy());
    CHECK(c.max_energy_drift() < kEnergyDriftTolerance);
    // zero mode tunes to the target; the near-Gaussian oscillatory block may sit at the cap
    // each block is either tuned to the target or pinned at the step cap
    for (std::size_t k = 0; k < c.block_count(); ++k) {
        CAPTURE(k);
        CHECK((std::abs(c.acceptance(k) - 0.3) < 0.1 || (c.step(k) > 0.99 && c.acceptance(k) > 0.2)));
    }
    for (std::size_t k = 0; k < c.block_count(); ++k) {
        CHECK(c.step(k) > 0.0);
        CHECK(c.step(k) < 1.0);
    }
}

TEST_CASE("checkpoint resumes the exact stream")
{
    ModeBasis b(1.0, 2);
    const auto target = GibbsTarget::loops(one_site(kDoubleWell, 1.0, 0.5, 0.0, 0.2), b, Mass(3.0));
    ChainParams p;
    p.burn_in = 200;
    Chain a(target, p, 12);
    a.burn_in();
    for (int i = 0; i < 50; ++i)
        a.sweep();
    std::stringstream ss;
    a.save(ss);
    for (int i = 0; i < 50; ++i)
        a.sweep();

    Chain r(target, p, 999);
    r.load(ss);
    CHECK(r.tuned());
    for (int i = 0; i < 50; ++i)
        r.sweep();
    CHECK(std::equal(a.state().begin(), a.state().end(), r.state().begin()));
    CHECK(a.energy() == doctest::Approx(r.energy()).epsilon(1e-12));

    std::stringstream junk("not a checkpoint");
    CHECK_THROWS(r.load(junk));
}

TEST_CASE("results do not depend on the worker count")
{
    ModeBasis b(2.0, 2);
    const auto target = GibbsTarget::loops(one_site(kDoubleWell, 2.0, 0.5, 0.0, 0.0), b, Mass(1.0));
    auto mc = small_mc(2000, 8);
    const auto f = clipped_average_moment(2);
    const auto one = expectation(target, f, mc);
    mc.workers = 3;
    const auto three = expectation(target, f, mc);
    CHECK(one.value == three.value);
    CHECK(one.std_error == three.std_error);
    mc.seed = 9;
    CHECK(expectation(target, f, mc).value != one.value);
}
