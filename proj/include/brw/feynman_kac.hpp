#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "brw/kernel.hpp"
#include "brw/ode.hpp"

namespace brw {

/// f(t, x): either a per-site table (time-independent) or a function of (t, x).
class SourceTerm {
public:
    using Function = std::function<double(double t, Site x)>;

    SourceTerm() = default;
    static SourceTerm constant(std::vector<double> table);
    static SourceTerm time_dependent(Function f);

    double operator()(double t, Site x) const;
    bool is_zero() const { return !fn_ && table_.empty(); }
    bool time_independent() const { return !fn_; }

private:
    std::vector<double> table_;
    Function fn_;
};

/// du/dt = scale * L_a u - v u + f,  u(0) = u0, on a torus.
/// The constructor checks table sizes and finiteness.
class ParabolicProblem {
public:
    ParabolicProblem(KernelSpec kernel, TorusGrid grid, double scale, std::vector<double> v,
                     SourceTerm f, std::vector<double> u0);

    const KernelSpec& kernel() const { return kernel_; }
    const TorusGrid& grid() const { return grid_; }
    double scale() const { return scale_; }
    const std::vector<double>& potential() const { return v_; }
    const SourceTerm& source() const { return f_; }
    const std::vector<double>& initial() const { return u0_; }

private:
    KernelSpec kernel_;
    TorusGrid grid_;
    double scale_;
    std::vector<double> v_;
    SourceTerm f_;
    std::vector<double> u0_;
};

/// p(t, x, y) = exp(t kappa L_a)(x, y) as a row-major |sites| x |sites| table, computed
/// from the circulant spectrum of the generator.
std::vector<double> transition_matrix(const KernelSpec& kernel, const TorusGrid& grid, double t);
/// Same with an explicit generator rate in place of kappa.
std::vector<double> transition_matrix(const KernelSpec& kernel, const TorusGrid& grid, double t,
                                      double scale);

/// u(t, .) by RK4 with step-halving control.
std::vector<double> solve_direct(const ParabolicProblem& problem, double t,
                                 const StepControl& control = {});
/// u at each of the sorted output times.
OdeSolution solve_direct_trajectory(const ParabolicProblem& problem, std::span<const double> times,
                                    const StepControl& control = {});

struct PathEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t paths = 0;
};

/// Path representation
///   u(t,x) = E[ e^{-int_0^t v(x(s))ds} u0(x(t)) + int_0^t f(t-s, x(s)) e^{-int_0^s v} ds ]
/// over continuous-time walks with generator scale * L_a started at x. The potential
/// integral is exact between jumps; the source integral is exact for time-independent f
/// and uses 5-point Gauss-Legendre panels of length <= 0.5 otherwise. Path i uses
/// stream (seed, i). Requires paths >= 100.
PathEstimate solve_fk_mc(const ParabolicProblem& problem, double t, Site x, std::size_t paths,
                         std::uint64_t seed, std::size_t threads = 0);

} // namespace brw
