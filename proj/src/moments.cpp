#include "brw/moments.hpp"

#include <cmath>

#include "brw/dft.hpp"

namespace brw {

double m1_closed_form(double k, double mu, double beta, double u0, double t)
{
    if (t < 0.0) throw InvalidArgument("time must be >= 0");
    const double r = beta - mu;
    if (r == 0.0) return u0 + k * t;
    // expm1 keeps the near-critical case accurate.
    return k * std::expm1(r * t) / r + std::exp(r * t) * u0;
}

FirstMomentCurve FirstMomentCurve::from(const ModelParams& params)
{
    return {params.k, params.law.mu, derived_rates(params.law).beta, params.init.mean()};
}

SteadyCoefficients steady_coefficients(const ModelParams& params)
{
    if (classify_criticality(params.law) != Criticality::subcritical)
        throw InvalidArgument("second-moment formulas require a subcritical law (mu > beta)");
    const DerivedRates r = derived_rates(params.law);
    const double v = params.law.mu - r.beta;
    const double kappa = params.kappa();
    SteadyCoefficients c;
    c.m = params.k / v;
    c.C1 = kappa * c.m;
    c.C2 = c.m * (params.law.mu + kappa + 0.5 * r.sum_fact);
    c.C3 = v + kappa;
    c.C4 = kappa;
    c.q = c.C4 / c.C3;
    return c;
}

SecondMomentField m2_transient(const ModelParams& params, const TorusGrid& grid, double t)
{
    if (t < 0.0) throw InvalidArgument("time must be >= 0");
    grid.require_fits(params.kernel);
    const SteadyCoefficients c = steady_coefficients(params);
    const DerivedRates r = derived_rates(params.law);
    const double v = params.law.mu - r.beta;
    const double kappa = params.kappa();
    const double k = params.k;
    const double m = c.m;
    const double u0 = params.init.mean();
    const double var0 = params.init.variance();
    const double diag = r.sum_sq + params.law.mu + 2.0 * kappa;

    const std::vector<double> ahat = symbol_on_grid(params.kernel, grid);
    const std::size_t N = grid.size();
    std::vector<double> heat_hat(N), m23_hat(N);
    for (std::size_t j = 0; j < N; ++j) {
        const double gap = 1.0 - ahat[j];
        heat_hat[j] = std::exp(-2.0 * kappa * gap * t);
        const double lambda = -2.0 * v - 2.0 * kappa * gap;
        const double A = -2.0 * kappa * ahat[j] + diag;
        // (A m + k)(e^{lambda t} - 1)/lambda + A (u0 - m)(e^{-vt} - e^{lambda t})/(v + 2 kappa gap)
        const double stationary_part = (A * m + k) * std::expm1(lambda * t) / lambda;
        const double shift = v + 2.0 * kappa * gap;
        const double transient_part =
            A * (u0 - m) * -std::exp(-v * t) * std::expm1(-shift * t) / shift;
        m23_hat[j] = stationary_part + transient_part;
    }

    SecondMomentField f;
    f.grid = grid;
    f.t = t;
    f.coefficients = c;
    const double decay2 = std::exp(-2.0 * v * t);
    f.m22 = m * m * -std::expm1(-2.0 * v * t) +
            2.0 * k * (u0 - m) / v * (std::exp(-v * t) - decay2);
    f.m23 = dft_inverse_real(grid, m23_hat);
    const std::vector<double> heat = dft_inverse_real(grid, heat_hat);
    f.m21.resize(N);
    f.m2.resize(N);
    for (std::size_t u = 0; u < N; ++u) {
        f.m21[u] = decay2 * (u0 * u0 + var0 * heat[u]);
        f.m2[u] = f.m21[u] + f.m22 + f.m23[u];
    }
    return f;
}

SeriesResult m2_steady_state_series(const ModelParams& params, const TorusGrid& grid, double tol)
{
    if (!(tol > 0.0)) throw InvalidArgument("series tolerance must be > 0");
    params.require_steady_state();
    grid.require_fits(params.kernel);
    const SteadyCoefficients c = steady_coefficients(params);
    const double coef = c.m * derived_rates(params.law).sum_choose2 / c.C3;
    const Site origin = 0;

    SeriesResult out;
    out.values.assign(grid.size(), c.m * c.m);
    out.values[origin] += c.m + coef;
    if (coef == 0.0 || c.q == 0.0) return out;

    const JumpTable walk = JumpTable::from_kernel(params.kernel, grid, 1.0);
    std::vector<double> power(grid.size(), 0.0), next(grid.size());
    power[origin] = 1.0;
    double qn = 1.0;
    while (true) {
        std::fill(next.begin(), next.end(), 0.0);
        for (Site u = 0; u < grid.size(); ++u) {
            if (power[u] == 0.0) continue;
            for (std::size_t e = 0; e < walk.jump_count(); ++e)
                next[walk.neighbor(u, e)] += power[u] * walk.rate(e);
        }
        power.swap(next);
        qn *= c.q;
        ++out.terms;
        for (Site u = 0; u < grid.size(); ++u) out.values[u] += coef * qn * power[u];
        if (coef * qn * c.q / (1.0 - c.q) < tol) break;
    }
    return out;
}

std::vector<double> m2_steady_state_fourier(const ModelParams& params, const TorusGrid& grid)
{
    params.require_steady_state();
    grid.require_fits(params.kernel);
    const SteadyCoefficients c = steady_coefficients(params);
    const std::vector<double> ahat = symbol_on_grid(params.kernel, grid);
    std::vector<double> what(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
        what[j] = (c.C2 - c.C1 * ahat[j]) / (c.C3 - c.C4 * ahat[j]);
    std::vector<double> w = dft_inverse_real(grid, what);
    for (double& x : w) x += c.m * c.m;
    return w;
}

std::vector<double> steady_covariance(const ModelParams& params, const TorusGrid& grid)
{
    std::vector<double> cov = m2_steady_state_fourier(params, grid);
    const double m = params.stationary_mean();
    for (double& x : cov) x -= m * m;
    return cov;
}

} // namespace brw
