#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "brw/dft.hpp"
#include "brw/kernel.hpp"

using namespace brw;

namespace {

KernelSpec kernel_1d(std::initializer_list<std::pair<int, double>> entries, double kappa = 0.25)
{
    KernelSpec k;
    k.dimension = 1;
    k.kappa = kappa;
    for (auto [z, w] : entries) k.entries.push_back({LatticeOffset{{z}}, w});
    return k;
}

bool mentions(const ValidationReport& r, const std::string& word)
{
    return r.summary().find(word) != std::string::npos;
}

} // namespace

TEST_SUITE("kernel") {

TEST_CASE("validation accepts the simple walk and names each defect")
{
    CHECK(validate_kernel(simple_random_walk(1, 0.25)).ok());
    CHECK(validate_kernel(simple_random_walk(2, 1.0)).ok());

    const auto even = validate_kernel(kernel_1d({{2, 0.5}, {-2, 0.5}}));
    CHECK_FALSE(even.ok());
    CHECK(mentions(even, "reducible"));

    const auto skew = validate_kernel(kernel_1d({{1, 0.6}, {-1, 0.4}}));
    CHECK_FALSE(skew.ok());
    CHECK(mentions(skew, "asymmetric"));

    CHECK_FALSE(validate_kernel(kernel_1d({{1, 0.3}, {-1, 0.3}})).ok());
    CHECK_FALSE(validate_kernel(kernel_1d({{0, 0.5}, {1, 0.25}, {-1, 0.25}})).ok());
    CHECK_FALSE(validate_kernel(kernel_1d({{1, 0.5}, {-1, 0.5}}, -1.0)).ok());
}

TEST_CASE("fourier symbol of the simple walk")
{
    const auto srw = simple_random_walk(1, 0.25);
    const double zero[] = {0.0}, pi[] = {std::numbers::pi}, half[] = {std::numbers::pi / 2};
    CHECK(fourier_symbol(srw, zero) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fourier_symbol(srw, pi) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(std::abs(fourier_symbol(srw, half)) < 1e-15);

    const auto wide = kernel_1d({{1, 0.3}, {-1, 0.3}, {3, 0.2}, {-3, 0.2}});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> th(-std::numbers::pi, std::numbers::pi);
    for (int i = 0; i < 50; ++i) {
        const double a[] = {th(rng)};
        const double b[] = {-a[0]};
        CHECK(fourier_symbol(wide, a) == doctest::Approx(fourier_symbol(wide, b)).epsilon(1e-15));
        CHECK(fourier_symbol(wide, a) ==
              doctest::Approx(0.6 * std::cos(a[0]) + 0.4 * std::cos(3 * a[0])).epsilon(1e-14));
    }
}

TEST_CASE("convolution powers by path enumeration")
{
    const auto srw = simple_random_walk(1, 0.25);
    const TorusGrid grid({16});
    const auto a1 = convolution_power(srw, 1, grid);
    CHECK(a1[grid.site_of(LatticeOffset{{1}})] == doctest::Approx(0.5));
    CHECK(a1[grid.site_of(LatticeOffset{{-1}})] == doctest::Approx(0.5));
    CHECK(a1[0] == 0.0);

    const auto a2 = convolution_power(srw, 2, grid);
    CHECK(a2[grid.site_of(LatticeOffset{{0}})] == doctest::Approx(0.5));
    CHECK(a2[grid.site_of(LatticeOffset{{2}})] == doctest::Approx(0.25));
    CHECK(a2[grid.site_of(LatticeOffset{{-2}})] == doctest::Approx(0.25));

    // n steps of +-1 land on u with probability C(n, (n+u)/2) / 2^n while no wrap occurs.
    const auto a5 = convolution_power(srw, 5, grid);
    const double binom[] = {1, 5, 10, 10, 5, 1};
    for (int j = 0; j <= 5; ++j) {
        const int u = 2 * j - 5;
        CHECK(a5[grid.site_of(LatticeOffset{{u}})] == doctest::Approx(binom[j] / 32.0).epsilon(1e-14));
    }
}

TEST_CASE("torus transform of convolution powers equals powers of the symbol")
{
    const auto wide = kernel_1d({{1, 0.3}, {-1, 0.3}, {2, 0.2}, {-2, 0.2}});
    const TorusGrid grid({12});
    const auto symbols = symbol_on_grid(wide, grid);
    for (int n = 1; n <= 6; ++n) {
        const auto an = convolution_power(wide, n, grid);
        for (Site j = 0; j < grid.size(); ++j) {
            // Direct O(N^2) transform, independent of the FFT backend.
            std::complex<double> s = 0;
            for (Site u = 0; u < grid.size(); ++u) {
                const double th = 2 * std::numbers::pi * double(j) * double(u) / 12.0;
                s += an[u] * std::complex<double>(std::cos(th), std::sin(th));
            }
            CHECK(std::abs(s - std::pow(symbols[j], n)) < 1e-10);
        }
    }
}

TEST_CASE("generator on indicator tables and mass conservation")
{
    const auto srw = simple_random_walk(1, 0.25);
    const TorusGrid grid({8});
    std::vector<double> ind(8, 0.0);
    ind[0] = 1.0;
    CHECK(apply_generator(srw, grid, ind, 1) == doctest::Approx(0.5));
    CHECK(apply_generator(srw, grid, ind, 0) == doctest::Approx(-1.0));

    std::vector<double> flat(8, 3.7);
    for (Site x = 0; x < 8; ++x) CHECK(std::abs(apply_generator(srw, grid, flat, x)) < 1e-15);

    const auto wide = kernel_1d({{1, 0.3}, {-1, 0.3}, {3, 0.2}, {-3, 0.2}});
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> p(8);
        double total = 0;
        for (auto& x : p) total += (x = U(rng));
        for (auto& x : p) x /= total;
        double sum = 0;
        for (Site x = 0; x < 8; ++x) sum += apply_generator(wide, grid, p, x);
        CHECK(std::abs(sum) < 1e-12);
    }
}

TEST_CASE("torus indexing")
{
    const TorusGrid grid({4, 5});
    CHECK(grid.size() == 20);
    for (Site s = 0; s < grid.size(); ++s) CHECK(grid.index(grid.coords(s)) == s);
    const int c[] = {3, 4};
    CHECK(grid.shift(grid.index(c), LatticeOffset{{1, 1}}) == 0);
    CHECK(grid.displacement(0, grid.index(c)) == LatticeOffset{{-1, -1}});
    CHECK(grid.site_of(LatticeOffset{{-1, 0}}) == grid.index(std::vector<int>{3, 0}));

    CHECK_THROWS_AS(TorusGrid({4}).require_fits(KernelSpec{1, {{LatticeOffset{{2}}, 0.5}, {LatticeOffset{{-2}}, 0.5}}, 1.0}),
                    InvalidArgument);
    CHECK_NOTHROW(TorusGrid({3}).require_fits(simple_random_walk(1, 1.0)));
}

TEST_CASE("jump table selection and generator")
{
    const auto srw = simple_random_walk(1, 0.5);
    const TorusGrid grid({6});
    const auto table = JumpTable::from_kernel(srw, grid, srw.kappa);
    CHECK(table.total_rate() == doctest::Approx(0.5));
    CHECK(table.pick(0.0) != table.pick(0.4999));

    const auto pair = JumpTable::pair(srw, grid, 1.0);
    CHECK(pair.grid().size() == 36);
    CHECK(pair.total_rate() == doctest::Approx(2.0));

    std::vector<double> f(6), out(6), ref(6);
    for (Site x = 0; x < 6; ++x) f[x] = double(x * x);
    table.apply(f, out);
    for (Site x = 0; x < 6; ++x) CHECK(out[x] == doctest::Approx(0.5 * apply_generator(srw, grid, f, x)));
}

TEST_CASE("dft convention and round trip")
{
    const TorusGrid grid({8});
    std::vector<double> delta1(8, 0.0);
    delta1[1] = 1.0;
    const auto hat = dft_forward_real(grid, delta1);
    for (Site j = 0; j < 8; ++j) {
        const double th = 2 * std::numbers::pi * double(j) / 8.0;
        CHECK(std::abs(hat[j] - std::complex<double>(std::cos(th), std::sin(th))) < 1e-14);
    }
    std::vector<std::complex<double>> f(8);
    for (Site u = 0; u < 8; ++u) f[u] = {std::sin(double(u)), std::cos(3.0 * double(u))};
    const auto back = dft_inverse(grid, dft_forward(grid, f));
    for (Site u = 0; u < 8; ++u) CHECK(std::abs(back[u] - f[u]) < 1e-14);
}

}
