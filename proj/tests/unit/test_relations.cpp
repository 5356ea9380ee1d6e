#include <doctest.h>

#include <cmath>
#include <random>

#include "brw/relations.hpp"
#include "oracles.hpp"

using namespace brw;

namespace {

struct Transition {
    double rate;
    std::vector<std::int64_t> delta;
};

// Every event the field can undergo from `n`, with its rate and the site increments.
std::vector<Transition> enumerate_events(const ModelParams& p, const TorusGrid& grid,
                                         const std::vector<std::int64_t>& n)
{
    const std::size_t S = grid.size();
    std::vector<Transition> out;
    auto unit = [&](std::initializer_list<std::pair<Site, std::int64_t>> changes) {
        std::vector<std::int64_t> d(S, 0);
        for (auto [s, c] : changes) d[s] += c;
        return d;
    };
    for (Site x = 0; x < S; ++x) {
        out.push_back({p.k, unit({{x, 1}})});
        if (n[x] == 0) continue;
        const double nx = double(n[x]);
        out.push_back({p.law.mu * nx, unit({{x, -1}})});
        for (auto [m, b] : p.law.b) out.push_back({b * nx, unit({{x, m - 1}})});
        for (const auto& e : p.kernel.entries)
            out.push_back({p.kappa() * e.weight * nx, unit({{x, -1}, {grid.shift(x, e.offset), 1}})});
    }
    return out;
}

double event_moment(const std::vector<Transition>& events, Site x, int p, Site y, int q)
{
    double s = 0;
    for (const auto& e : events) s += e.rate * std::pow(double(e.delta[x]), p) * std::pow(double(e.delta[y]), q);
    return s;
}

} // namespace

TEST_SUITE("relations") {

TEST_CASE("affine forms match brute-force event enumeration")
{
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> count(0, 4);
    std::uniform_real_distribution<double> U(0.1, 1.0);
    const TorusGrid grid({7});
    for (int trial = 0; trial < 30; ++trial) {
        ModelParams p;
        KernelSpec kernel;
        kernel.dimension = 1;
        kernel.kappa = U(rng);
        kernel.entries = {{LatticeOffset{{1}}, 0.35}, {LatticeOffset{{-1}}, 0.35},
                          {LatticeOffset{{2}}, 0.15}, {LatticeOffset{{-2}}, 0.15}};
        p.kernel = kernel;
        p.law = {U(rng), {{2, U(rng)}, {3, U(rng) / 2}, {5, U(rng) / 4}}};
        p.k = U(rng);
        std::vector<std::int64_t> n(grid.size());
        for (auto& c : n) c = count(rng);

        const XiRelations rel(p, grid);
        const auto events = enumerate_events(p, grid, n);
        const Site x = trial % 7, y = (trial + 1 + trial % 3) % 7;

        CHECK(rel.mean(x).evaluate(n) == doctest::Approx(event_moment(events, x, 1, x, 0)).epsilon(1e-12));
        for (int pw = 2; pw <= 4; ++pw)
            CHECK(rel.power(x, pw).evaluate(n) == doctest::Approx(event_moment(events, x, pw, x, 0)).epsilon(1e-12));
        for (int pw = 1; pw <= 3; ++pw)
            for (int qw = 1; qw <= 3; ++qw)
                CHECK(rel.mixed(x, pw, y, qw).evaluate(n) ==
                      doctest::Approx(event_moment(events, x, pw, y, qw)).epsilon(1e-12));

        // No event touches three sites.
        const Site w = (y + 2) % 7 == x ? (y + 3) % 7 : (y + 2) % 7;
        const SitePower triple[] = {{x, 1}, {y, 1}, {w, 1}};
        CHECK(rel.moment(triple).evaluate(n) == 0.0);
        double brute = 0;
        for (const auto& e : events) brute += e.rate * double(e.delta[x] * e.delta[y] * e.delta[w]);
        CHECK(brute == 0.0);
    }
}

TEST_CASE("binary example relations in closed form")
{
    const auto p = oracle::binary_example();
    const TorusGrid grid({8});
    const XiRelations rel(p, grid);
    std::vector<std::int64_t> n(8, 0);
    n[3] = 2;
    n[4] = 5;
    // E xi(x) = (beta - mu) n(x) + kappa L_a n(x) + k
    CHECK(rel.mean(3).evaluate(n) == doctest::Approx(-1.0 * 2 + 0.25 * (0.5 * 5 + 0.5 * 0 - 2) + 1));
    // E xi(x)^2 = (sum_sq + mu) n(x) + kappa (n(x) + L-neighbour mass) + k
    CHECK(rel.power(3, 2).evaluate(n) == doctest::Approx(2.0 * 2 + 0.25 * (2 + 0.5 * 5) + 1));
    // E xi(x) xi(y) = -kappa a(y - x) (n(x) + n(y))
    CHECK(rel.mixed(3, 1, 4, 1).evaluate(n) == doctest::Approx(-0.25 * 0.5 * 7));
    CHECK(rel.mixed(3, 1, 6, 1).evaluate(n) == 0.0);
    CHECK(rel.kernel_weight(3, 4) == 0.5);
}

}
