#pragma once

#include <vector>

#include "brw/kernel.hpp"
#include "brw/model.hpp"

namespace brw {

/// m1(t) = k/(beta-mu) (e^{(beta-mu)t} - 1) + e^{(beta-mu)t} u0; u0 + k t when beta = mu.
double m1_closed_form(double k, double mu, double beta, double u0, double t);

/// Space-constant first moment of a homogeneous model.
struct FirstMomentCurve {
    double k = 0.0;
    double mu = 0.0;
    double beta = 0.0;
    double u0 = 0.0;

    static FirstMomentCurve from(const ModelParams& params);
    double operator()(double t) const { return m1_closed_form(k, mu, beta, u0, t); }
    /// k/(mu-beta); only meaningful when subcritical.
    double limit() const { return k / (mu - beta); }
};

/// Coefficients of the stationary covariance transform
///   w^(theta) = (C2 - C1 a^(theta)) / (C3 - C4 a^(theta)),  m2(inf,u) = m^2 + w(u),
/// with m = k/(mu-beta) and q = C4/C3.
struct SteadyCoefficients {
    double m = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    double C3 = 0.0;
    double C4 = 0.0;
    double q = 0.0;
};

SteadyCoefficients steady_coefficients(const ModelParams& params);

/// m2(t,u) = E n(t,x) n(t,x+u) on a torus, split as
///   m21: initial data carried by the homogeneous pair dynamics,
///   m22: the space-constant immigration part,
///   m23: the part driven by same-site and neighbour sources.
/// Tables are indexed like sites (offset u at grid.site_of(u)).
struct SecondMomentField {
    TorusGrid grid;
    double t = 0.0;
    std::vector<double> m2;
    std::vector<double> m21;
    double m22 = 0.0;
    std::vector<double> m23;
    SteadyCoefficients coefficients;

    double at(const LatticeOffset& u) const { return m2[grid.site_of(u)]; }
};

/// Exact transient second moment for i.i.d. initial data (Fourier route, per-frequency
/// closed form). Rejects non-subcritical params.
SecondMomentField m2_transient(const ModelParams& params, const TorusGrid& grid, double t);

struct SeriesResult {
    std::vector<double> values;
    int terms = 0;
};

/// m2(inf,u) via the convolution-power series
///   m^2 + m delta0 + m sum C(n,2) b_n / C3 (delta0 + sum_{n>=1} q^n a^{*n}(u)),
/// truncated once the geometric tail bound drops below tol.
SeriesResult m2_steady_state_series(const ModelParams& params, const TorusGrid& grid,
                                    double tol = 1e-14);

/// m2(inf,u) by inverting the stationary transform on all torus frequencies.
std::vector<double> m2_steady_state_fourier(const ModelParams& params, const TorusGrid& grid);

/// m2(inf,u) - m1(inf)^2.
std::vector<double> steady_covariance(const ModelParams& params, const TorusGrid& grid);

} // namespace brw
