#pragma once

// Reference computations used as independent checks; none of them call into the
// library routines they are compared with.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <vector>

#include "brw/kernel.hpp"
#include "brw/model.hpp"

namespace oracle {

inline brw::ModelParams binary_example(double init_value = 1.0,
                                       brw::InitialCondition::Kind kind = brw::InitialCondition::Kind::constant)
{
    brw::ModelParams p;
    p.kernel = brw::simple_random_walk(1, 0.25);
    p.law.mu = 1.5;
    p.law.b = {{2, 0.5}};
    p.k = 1.0;
    p.init.kind = kind;
    p.init.value = init_value;
    return p;
}

using Matrix = std::vector<double>; // row-major n x n

inline Matrix multiply(const Matrix& a, const Matrix& b, std::size_t n)
{
    Matrix c(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a[i * n + k];
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) c[i * n + j] += aik * b[k * n + j];
        }
    return c;
}

/// exp(A) by scaling and squaring with a 30-term Taylor polynomial.
inline Matrix expm(Matrix a, std::size_t n)
{
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(a[i * n + j]);
        norm = std::max(norm, row);
    }
    int squarings = 0;
    while (norm > 0.5) {
        norm /= 2;
        ++squarings;
    }
    for (auto& x : a) x = std::ldexp(x, -squarings);
    Matrix result(n * n, 0.0), term(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) result[i * n + i] = term[i * n + i] = 1.0;
    for (int m = 1; m <= 30; ++m) {
        term = multiply(term, a, n);
        for (auto& x : term) x /= m;
        for (std::size_t i = 0; i < n * n; ++i) result[i] += term[i];
    }
    for (int s = 0; s < squarings; ++s) result = multiply(result, result, n);
    return result;
}

/// Generator of the nearest-neighbour walk on the ring Z_L with total jump rate `rate`.
inline Matrix ring_generator(int L, double rate)
{
    const auto n = static_cast<std::size_t>(L);
    Matrix g(n * n, 0.0);
    for (int x = 0; x < L; ++x) {
        g[x * n + x] -= rate;
        g[x * n + (x + 1) % L] += rate / 2;
        g[x * n + (x + L - 1) % L] += rate / 2;
    }
    return g;
}

/// Stationary pair covariance on the ring by O(L^2) cosine quadrature of
///   w^(th) = (C2 - C1 cos th) / (C3 - C4 cos th),
/// C2 = m (mu + kappa + sum (n-1)(n-2) b_n / 2), C1 = kappa m, C3 = mu - beta + kappa, C4 = kappa.
inline std::vector<double> ring_steady_covariance(int L, double kappa, double mu,
                                                  const std::map<int, double>& b, double k)
{
    double beta = 0, fact = 0;
    for (auto [n, r] : b) {
        beta += (n - 1) * r;
        fact += (n - 1.0) * (n - 2.0) * r;
    }
    const double v = mu - beta;
    const double m = k / v;
    const double C2 = m * (mu + kappa + fact / 2);
    const double C1 = kappa * m;
    const double C3 = v + kappa;
    const double C4 = kappa;
    std::vector<double> w(static_cast<std::size_t>(L), 0.0);
    for (int u = 0; u < L; ++u) {
        double s = 0;
        for (int j = 0; j < L; ++j) {
            const double th = 2 * std::numbers::pi * j / L;
            const double c = std::cos(th);
            s += (C2 - C1 * c) / (C3 - C4 * c) * std::cos(th * u);
        }
        w[static_cast<std::size_t>(u)] = s / L;
    }
    return w;
}

} // namespace oracle
