#pragma once

#include <functional>
#include <span>
#include <vector>

namespace brw {

/// dy/dt = rhs(t, y), written into dy.
using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

struct OdeSolution {
    std::vector<double> times;
    std::vector<std::vector<double>> states; // one per output time
    double step = 0.0;                       // accepted h
};

/// Classical RK4 with a fixed step; the last step before each output time is shortened
/// to land on it exactly. Output times must be sorted and >= t0.
OdeSolution rk4_fixed(const OdeRhs& rhs, std::span<const double> y0, double t0,
                      std::span<const double> times, double h);

struct StepControl {
    double tolerance = 1e-8;
    double initial_step = 0.1;
    int max_halvings = 14;
};

/// RK4 with step halving: h is halved until the outputs at all requested times change by
/// less than `tolerance` (max abs). Throws NumericalFailure with the last tried h otherwise.
OdeSolution rk4_controlled(const OdeRhs& rhs, std::span<const double> y0, double t0,
                           std::span<const double> times, const StepControl& control = {});

} // namespace brw
