#include <doctest.h>

#include <cmath>
#include <random>

#include "brw/moments.hpp"
#include "oracles.hpp"

using namespace brw;

TEST_SUITE("moments") {

TEST_CASE("first-moment closed form")
{
    for (double t : {0.0, 0.3, 2.0, 50.0}) CHECK(m1_closed_form(1.0, 1.5, 0.5, 1.0, t) == doctest::Approx(1.0));
    CHECK(m1_closed_form(0.0, 1.5, 0.5, 1.0, 3.0) == doctest::Approx(std::exp(-3.0)));
    CHECK(m1_closed_form(0.0, 1.5, 0.5, 1.0, 3.0) == doctest::Approx(0.049787).epsilon(1e-5));
    CHECK(m1_closed_form(1.0, 1.5, 0.5, 0.0, 200.0) == doctest::Approx(1.0));
    CHECK(m1_closed_form(2.0, 0.5, 0.5, 1.0, 3.0) == doctest::Approx(7.0));
    CHECK(m1_closed_form(1.0, 1.5, 0.5, 0.0, 3.0) == doctest::Approx(1 - std::exp(-3.0)));

    const auto curve = FirstMomentCurve::from(oracle::binary_example(0.0));
    CHECK(curve.limit() == doctest::Approx(1.0));
    CHECK(curve(1.0) == doctest::Approx(1 - std::exp(-1.0)));
}

TEST_CASE("steady state matches the cosine-quadrature oracle on L = 4096")
{
    const auto p = oracle::binary_example();
    const TorusGrid grid({4096});
    const auto fourier = m2_steady_state_fourier(p, grid);
    const auto w = oracle::ring_steady_covariance(4096, 0.25, 1.5, {{2, 0.5}}, 1.0);
    for (int u : {0, 1, 2, 6, 20}) CHECK(std::abs(fourier[grid.site_of(LatticeOffset{{u}})] - (1.0 + w[u])) < 1e-12);

    // Targets from the oracle, recorded once.
    CHECK(fourier[0] == doctest::Approx(2.408248290463863).epsilon(1e-13));
    CHECK(fourier[1] == doctest::Approx(1.041241452319315).epsilon(1e-13));
    CHECK(fourier[2] == doctest::Approx(1.0041662327292877).epsilon(1e-13));
    CHECK(fourier[6] == doctest::Approx(1.0000004338921864).epsilon(1e-13));
}

TEST_CASE("series and Fourier evaluators agree")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> U(0.1, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams p;
        p.kernel = simple_random_walk(1, U(rng));
        p.law = {2.0 + U(rng), {{2, U(rng)}, {3, U(rng) / 2}}};
        p.k = U(rng) * 2;
        const TorusGrid grid({64});
        const auto series = m2_steady_state_series(p, grid);
        const auto fourier = m2_steady_state_fourier(p, grid);
        CHECK(series.terms > 0);
        for (Site u = 0; u < grid.size(); ++u) CHECK(std::abs(series.values[u] - fourier[u]) < 1e-10);
    }
    const auto p2 = oracle::binary_example();
    const TorusGrid plane({8, 8});
    auto q = p2;
    q.kernel = simple_random_walk(2, 0.25);
    const auto s2 = m2_steady_state_series(q, plane);
    const auto f2 = m2_steady_state_fourier(q, plane);
    for (Site u = 0; u < plane.size(); ++u) CHECK(std::abs(s2.values[u] - f2[u]) < 1e-10);
}

TEST_CASE("stationary covariance shape")
{
    const auto p = oracle::binary_example();
    const TorusGrid grid({64});
    const auto cov = steady_covariance(p, grid);
    CHECK(cov[0] == doctest::Approx(1.408248290463863).epsilon(1e-12));
    for (int u = 1; u < 32; ++u)
        CHECK(cov[grid.site_of(LatticeOffset{{u}})] == cov[grid.site_of(LatticeOffset{{-u}})]);
    CHECK(cov[grid.site_of(LatticeOffset{{6}})] < cov[grid.site_of(LatticeOffset{{2}})]);

    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> U(0.05, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        ModelParams r;
        r.kernel = simple_random_walk(1, U(rng));
        r.law = {1.0 + U(rng), {{2, U(rng) / 2}, {4, U(rng) / 6}}};
        r.k = U(rng);
        const auto c = steady_covariance(r, TorusGrid({32}));
        CHECK(c[0] > 0.0);
        // Terms far out in the series sit below rounding; allow that much.
        for (double x : c) CHECK(x > -1e-14 * c[0]);
    }
}

TEST_CASE("vanishing diffusion leaves only the mean square off the origin")
{
    auto p = oracle::binary_example();
    p.kernel.kappa = 1e-9;
    const TorusGrid grid({16});
    const auto s = m2_steady_state_series(p, grid);
    for (int u = 1; u < 8; ++u) CHECK(std::abs(s.values[grid.site_of(LatticeOffset{{u}})] - 1.0) < 1e-8);
}

TEST_CASE("transient second moment: initial data, limit and decomposition")
{
    const TorusGrid grid({16});
    const auto constant = m2_transient(oracle::binary_example(3.0), grid, 0.0);
    for (double x : constant.m2) CHECK(x == doctest::Approx(9.0).epsilon(1e-14));

    const auto pois = m2_transient(oracle::binary_example(1.5, InitialCondition::Kind::poisson), grid, 0.0);
    CHECK(pois.m2[0] == doctest::Approx(1.5 * 1.5 + 1.5).epsilon(1e-14));
    for (Site u = 1; u < grid.size(); ++u) CHECK(pois.m2[u] == doctest::Approx(2.25).epsilon(1e-14));

    const auto late = m2_transient(oracle::binary_example(0.0), grid, 40.0);
    CHECK(late.m22 == doctest::Approx(1.0).epsilon(1e-14));
    const auto steady = m2_steady_state_fourier(oracle::binary_example(), grid);
    for (Site u = 0; u < grid.size(); ++u) {
        CHECK(std::abs(late.m2[u] - steady[u]) < 1e-10);
        CHECK(late.m2[u] == doctest::Approx(late.m21[u] + late.m22 + late.m23[u]).epsilon(1e-14));
    }
}

TEST_CASE("initial-data part decays at twice the first-moment rate")
{
    const auto p = oracle::binary_example(1.5, InitialCondition::Kind::poisson);
    const TorusGrid grid({16});
    // Least-squares slope of log m21(t, 0) over t in [5, 15].
    double st = 0, sy = 0, stt = 0, sty = 0;
    int n = 0;
    for (double t = 5; t <= 15; t += 0.5, ++n) {
        const double y = std::log(m2_transient(p, grid, t).m21[0]);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    const double slope = (n * sty - st * sy) / (n * stt - st * st);
    CHECK(slope == doctest::Approx(-2.0).epsilon(0.05));
}

TEST_CASE("initial conditions are forgotten")
{
    const TorusGrid grid({16});
    const double t = 20.0 / 1.0;
    const auto a = m2_transient(oracle::binary_example(0.0), grid, t);
    const auto b = m2_transient(oracle::binary_example(3.0), grid, t);
    for (Site u = 0; u < grid.size(); ++u) CHECK(std::abs(a.m2[u] - b.m2[u]) < 1e-6);
    CHECK(std::abs(m1_closed_form(1, 1.5, 0.5, 0, t) - m1_closed_form(1, 1.5, 0.5, 3, t)) < 1e-6);
}

TEST_CASE("rejections")
{
    auto p = oracle::binary_example();
    const TorusGrid grid({16});
    CHECK_THROWS_AS(m2_steady_state_series(p, grid, 0.0), InvalidArgument);
    p.law.mu = 0.4;
    CHECK_THROWS_AS(m2_steady_state_fourier(p, grid), InvalidArgument);
    CHECK_THROWS_AS(steady_coefficients(p), InvalidArgument);
}

}
