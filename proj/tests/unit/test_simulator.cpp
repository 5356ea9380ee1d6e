#include <doctest.h>

#include <cmath>
#include <random>

#include "brw/moments.hpp"
#include "brw/simulator.hpp"
#include "oracles.hpp"

using namespace brw;

namespace {

FieldState field(const TorusGrid& grid, std::vector<std::int64_t> counts)
{
    return FieldState{grid, std::move(counts), 0.0};
}

} // namespace

TEST_SUITE("simulator") {

TEST_CASE("empty field without immigration is absorbing")
{
    auto p = oracle::binary_example();
    p.k = 0.0;
    const TorusGrid grid({8});
    FieldSimulator sim(p, field(grid, std::vector<std::int64_t>(8, 0)));
    Rng rng(1);
    CHECK(sim.total_rate() == 0.0);
    CHECK_FALSE(sim.step(rng).has_value());
    CHECK_FALSE(sim.next_event_time(rng).has_value());
}

TEST_CASE("pure jumps conserve the population")
{
    ModelParams p;
    p.kernel = simple_random_walk(1, 1.3);
    p.law = {0.0, {}};
    p.k = 0.0;
    const TorusGrid grid({10});
    FieldSimulator sim(p, field(grid, {3, 0, 1, 4, 0, 0, 2, 0, 0, 5}));
    Rng rng(2);
    for (int i = 0; i < 5000; ++i) {
        const auto e = sim.step(rng);
        REQUIRE(e.has_value());
        CHECK(e->kind == EventKind::jump);
        REQUIRE(sim.state().total() == 15);
    }
    CHECK(sim.population() == 15);
}

TEST_CASE("site rates sum the listed sub-rates")
{
    const auto p = oracle::binary_example();
    const TorusGrid grid({4});
    FieldSimulator sim(p, field(grid, {1, 0, 0, 0}));
    CHECK(sim.site_rate(0) == doctest::Approx(2.25 + 1.0));
    CHECK(sim.site_rate(1) == doctest::Approx(1.0));
    CHECK(sim.total_rate() == doctest::Approx(2.25 + 4.0));
}

TEST_CASE("event frequencies follow the rates")
{
    // One site with 4 particles: jump 0.25, death 1.5, branch 0.5 per particle; immigration 1 per site.
    const auto p = oracle::binary_example();
    const TorusGrid grid({4});
    std::vector<std::int64_t> counts{4, 0, 0, 0};
    const double total = 4 * 2.25 + 4 * 1.0;
    std::map<EventKind, int> seen;
    Rng rng(3);
    const int draws = 200000;
    for (int i = 0; i < draws; ++i) {
        FieldSimulator sim(p, field(grid, counts));
        seen[sim.fire(0.0, rng).kind]++;
    }
    const std::map<EventKind, double> expected{{EventKind::jump, 1.0 / total},
                                               {EventKind::death, 6.0 / total},
                                               {EventKind::branch, 2.0 / total},
                                               {EventKind::immigration, 4.0 / total}};
    for (auto [kind, prob] : expected) {
        const double se = std::sqrt(prob * (1 - prob) / draws);
        CHECK(std::abs(seen[kind] / double(draws) - prob) < 4 * se);
    }
}

TEST_CASE("snapshots: horizon zero and determinism")
{
    const auto p = oracle::binary_example(2.0);
    const TorusGrid grid({6});
    const double zero[] = {0.0};
    const auto snaps = simulate_replica(p, grid, 0.0, zero, 99);
    REQUIRE(snaps.size() == 1);
    CHECK(snaps[0].counts == std::vector<std::int64_t>(6, 2));

    const double times[] = {0.5, 1.0, 3.0};
    const auto a = simulate_replica(p, grid, 3.0, times, 1234);
    const auto b = simulate_replica(p, grid, 3.0, times, 1234);
    const auto c = simulate_replica(p, grid, 3.0, times, 1235);
    bool differs = false;
    for (std::size_t s = 0; s < 3; ++s) {
        CHECK(a[s].counts == b[s].counts);
        differs = differs || a[s].counts != c[s].counts;
    }
    CHECK(differs);
}

TEST_CASE("ensemble: forced seeds, thread independence, standard error law")
{
    const auto p = oracle::binary_example();
    const TorusGrid grid({8});
    const double times[] = {1.0, 2.0};

    EnsembleOptions forced;
    forced.force_equal_seeds = true;
    const auto eq = run_ensemble(p, grid, 2.0, times, 2, 5, forced);
    for (const auto& s : eq.stats.m1) CHECK(s.se == 0.0);

    EnsembleOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const auto r1 = run_ensemble(p, grid, 2.0, times, 40, 77, one);
    const auto r4 = run_ensemble(p, grid, 2.0, times, 40, 77, four);
    for (std::size_t s = 0; s < 2; ++s) {
        CHECK(r1.stats.m1[s].mean == r4.stats.m1[s].mean);
        CHECK(r1.stats.m2_diag[s].mean == r4.stats.m2_diag[s].mean);
    }

    const auto small = run_ensemble(p, grid, 2.0, times, 1000, 8);
    const auto large = run_ensemble(p, grid, 2.0, times, 4000, 9);
    const double ratio = large.stats.m1[1].se / small.stats.m1[1].se;
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));
    const auto twice = run_ensemble(p, grid, 2.0, times, 2000, 10);
    CHECK(twice.stats.m1[1].se / small.stats.m1[1].se == doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("stationary start keeps the mean at the fixed point")
{
    const auto p = oracle::binary_example();
    const TorusGrid grid({16});
    const double times[] = {1.0, 5.0, 10.0};
    const auto r = run_ensemble(p, grid, 10.0, times, 1500, 20261017);
    for (const auto& s : r.stats.m1) CHECK(std::abs(s.mean - 1.0) <= 3 * s.se);
}

TEST_CASE("subcritical running mean stays bounded")
{
    auto p = oracle::binary_example(0.0);
    p.k = 2.0;
    p.law.mu = 1.0; // mu - beta = 0.5
    const TorusGrid grid({8});
    std::vector<double> times;
    for (int i = 1; i <= 50; ++i) times.push_back(i);
    const auto r = run_ensemble(p, grid, 50.0, times, 200, 31);
    double running = 0;
    for (const auto& s : r.stats.m1) running = std::max(running, s.mean);
    CHECK(running < 10 * 2.0 / 0.5);
}

TEST_CASE("moment estimators at time zero")
{
    const TorusGrid grid({16});
    const double zero[] = {0.0};
    const auto constant = run_ensemble(oracle::binary_example(3.0), grid, 0.0, zero, 4, 1);
    const LatticeOffset u2{{2}}, u0{{0}};
    const auto c2 = estimate_moment(constant.ensemble, 0.0, std::span(&u2, 1));
    CHECK(c2.mean == 9.0);
    CHECK(c2.se == 0.0);

    const auto pois = run_ensemble(oracle::binary_example(1.5, InitialCondition::Kind::poisson), grid,
                                   0.0, zero, 3000, 2);
    const auto p2 = estimate_moment(pois.ensemble, 0.0, std::span(&u0, 1));
    CHECK(std::abs(p2.mean - (1.5 * 1.5 + 1.5)) <= 3 * p2.se);

    const LatticeOffset bad{{1, 1}}, far{{9}};
    CHECK_THROWS_AS(estimate_moment(pois.ensemble, 0.0, std::span(&bad, 1)), InvalidArgument);
    CHECK_THROWS_AS(estimate_moment(pois.ensemble, 0.0, std::span(&far, 1)), InvalidArgument);
}

TEST_CASE("generating-function estimator")
{
    const TorusGrid grid({8});
    const double t[] = {2.0};
    const auto r = run_ensemble(oracle::binary_example(), grid, 2.0, t, 3000, 3);
    const auto g0 = estimate_generating_function(r.ensemble, 0.0, 2.0, 3);
    CHECK(g0.mean == 1.0);
    CHECK(g0.se == 0.0);

    std::vector<double> empty(r.ensemble.replicas());
    for (std::size_t i = 0; i < empty.size(); ++i) empty[i] = r.ensemble.snapshot(i, 0)[3] == 0 ? 1.0 : 0.0;
    const auto p0 = summarize(empty);
    const auto g50 = estimate_generating_function(r.ensemble, 50.0, 2.0, 3);
    CHECK(std::abs(g50.mean - p0.mean) <= 3 * p0.se + 1e-20);
    CHECK_THROWS_AS(estimate_generating_function(r.ensemble, -1.0, 2.0, 3), InvalidArgument);
}

TEST_CASE("explosion guard aborts supercritical replicas")
{
    auto p = oracle::binary_example(5.0);
    p.law = {0.1, {{2, 2.0}}};
    const TorusGrid grid({4});
    const double t[] = {20.0};
    EnsembleOptions opt;
    opt.explosion_cap = 2000;
    CHECK_THROWS_AS(run_ensemble(p, grid, 20.0, t, 4, 1, opt), ReplicaAborted);
}

TEST_CASE("drift audit")
{
    auto quiet = oracle::binary_example();
    quiet.k = 0.0;
    const TorusGrid grid({8});
    const auto none = drift_audit(quiet, field(grid, std::vector<std::int64_t>(8, 0)), 1, 2, 1e-3, 100, 4);
    CHECK(none.ok());
    for (const auto& c : none.checks) {
        CHECK(c.empirical == 0.0);
        CHECK(c.target == 0.0);
    }

    DriftAuditOptions opt;
    opt.mixed_powers = {{1, 2}, {2, 1}, {2, 2}};
    opt.third_site = 4;
    const auto report =
        drift_audit(oracle::binary_example(), field(grid, {2, 3, 1, 0, 4, 1, 0, 2}), 2, 3, 1e-3, 20000, 5, opt);
    CHECK(report.checks.size() >= 7);
    for (const auto& c : report.checks) {
        INFO(c.statistic, ": ", c.empirical, " vs ", c.target, " +- ", c.allowance);
        CHECK(c.pass);
    }
    CHECK_THROWS_AS(drift_audit(quiet, field(grid, std::vector<std::int64_t>(8, 0)), 1, 1, 1e-3, 100, 4),
                    InvalidArgument);
}

}
