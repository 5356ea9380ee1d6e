#include "brw/ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "brw/kernel.hpp"

namespace brw {

OdeSolution rk4_fixed(const OdeRhs& rhs, std::span<const double> y0, double t0,
                      std::span<const double> times, double h)
{
    if (!(h > 0.0)) throw InvalidArgument("RK4 step must be > 0");
    if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < t0))
        throw InvalidArgument("output times must be sorted and >= t0");

    const std::size_t n = y0.size();
    std::vector<double> y(y0.begin(), y0.end());
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    OdeSolution sol;
    sol.step = h;
    sol.times.assign(times.begin(), times.end());

    double t = t0;
    auto advance = [&](double dt) {
        rhs(t, y, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
        rhs(t + 0.5 * dt, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
        rhs(t + 0.5 * dt, tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
        rhs(t + dt, tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t += dt;
    };

    for (double target : times) {
        const double span = target - t;
        if (span > 0.0) {
            const auto steps = static_cast<long long>(std::ceil(span / h - 1e-9));
            const double dt = span / static_cast<double>(steps);
            for (long long s = 0; s < steps; ++s) advance(dt);
            t = target;
        }
        for (double v : y)
            if (!std::isfinite(v)) throw NumericalFailure("RK4 produced a non-finite value");
        sol.states.push_back(y);
    }
    return sol;
}

OdeSolution rk4_controlled(const OdeRhs& rhs, std::span<const double> y0, double t0,
                           std::span<const double> times, const StepControl& control)
{
    if (!(control.tolerance > 0.0)) throw InvalidArgument("step-control tolerance must be > 0");
    double h = control.initial_step;
    double change = 0.0;
    OdeSolution coarse;
    bool have_coarse = false;
    for (int halving = 0; halving <= control.max_halvings; ++halving) {
        OdeSolution fine;
        try {
            fine = rk4_fixed(rhs, y0, t0, times, h);
        } catch (const NumericalFailure&) {
            h *= 0.5;
            have_coarse = false;
            continue;
        }
        if (have_coarse) {
            change = 0.0;
            for (std::size_t i = 0; i < fine.states.size(); ++i)
                for (std::size_t j = 0; j < fine.states[i].size(); ++j)
                    change = std::max(change, std::abs(fine.states[i][j] - coarse.states[i][j]));
            if (change < control.tolerance) return fine;
        }
        coarse = std::move(fine);
        have_coarse = true;
        h *= 0.5;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "RK4 step control failed (last change %.3g); try an initial step below %.3g",
                  change, h);
    throw NumericalFailure(buf);
}

} // namespace brw
