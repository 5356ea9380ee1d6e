#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brw/kernel.hpp"
#include "brw/model.hpp"
#include "brw/ode.hpp"
#include "brw/parallel.hpp"

namespace brw {

/// Centers (v0, k0, u0, u0_pair) and half-width epsilon of the admissible rate windows.
struct PerturbationEnvelope {
    double v0 = 1.0;
    double k0 = 1.0;
    double u0 = 1.0;
    double u0_pair = 1.0;
    double epsilon = 0.0;

    /// Positivity of the centers, epsilon >= 0 and epsilon <= min(k0, v0)/2.
    void validate() const;
};

struct AssumptionReport {
    bool ok = true;
    std::string field; // first violated field: "v", "k", "u0" or "u0_pair"
    Site site = 0;
    Site site2 = 0; // second site for u0_pair
    double value = 0.0;
    std::string message() const;
};

/// Sitewise window checks on v, k, u0(x) and (if given, |sites|^2 row-major) u0(x,y).
AssumptionReport check_assumptions(const SpatialModel& model, const PerturbationEnvelope& env,
                                   std::span<const double> u0, std::span<const double> u0_pair = {});

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

/// First-moment envelope
///   upper = P+ + (u0 + eps - P+) e^{-(v0-eps)t},  P+ = (k0+eps)/(v0-eps)
///   lower = P- + (u0 - eps - P-) e^{-(v0+eps)t},  P- = (k0-eps)/(v0+eps)
/// i.e. the solutions of the constant-rate equations with the extremal rates and data.
Interval m1_envelope(const PerturbationEnvelope& env, double u0, double t);

/// Explicit bound curves. With a+- = v0 -+ eps and I(P, Q, a) =
/// P (1 - e^{-2at})/(2a) + Q (e^{-at} - e^{-2at})/a:
///   m2 - L <= (u0_pair + eps) e^{-2a+ t} + 2(k0 + eps + kappa) I(P+, Q+, a+)
///   m2 - L >= (u0_pair - eps) e^{-2a- t} + 2(k0 - eps) I(P-, Q-, a-) - 2 kappa I(P+, Q+, a+)
/// and B, A are those minus k0^2/v0^2.
class EnvelopeBounds {
public:
    EnvelopeBounds(const PerturbationEnvelope& env, double kappa);

    Interval m1(double t) const;
    /// (A(t), B(t)).
    Interval m2(double t) const;
    /// G-piece window [(u0_pair - eps) e^{-2a- t}, (u0_pair + eps) e^{-2a+ t}].
    Interval g_piece(double t) const;

    // m1: upper = C0p + C1p e^{-a+ t}, lower = C0m + C1m e^{-a- t}.
    double C0p = 0, C1p = 0, C0m = 0, C1m = 0;
    // B = C2p e^{-a+ t} + C3p e^{-2a+ t} + C4p_eps + (kappa k0/v0^2)(1 - e^{-2a+ t}).
    double C2p = 0, C3p = 0, C4p_eps = 0;
    // A = C2m e^{-a- t} + C3m e^{-2a- t} + C4m_eps - drain (1 - e^{-2a+ t})
    //     - cross (e^{-a+ t} - e^{-2a+ t}),  drain = kappa P+/a+, cross = 2 kappa Q+/a+.
    double C2m = 0, C3m = 0, C4m_eps = 0, drain = 0, cross = 0;

    const PerturbationEnvelope& envelope() const { return env_; }
    double kappa() const { return kappa_; }

private:
    PerturbationEnvelope env_;
    double kappa_;
    double ap_, am_;
};

/// One admissible perturbed system: v, k, u0 drawn i.i.d. uniform on their windows,
/// u0(x,y) symmetric uniform on its window, mu(x) = v(x) + beta with constant b.
struct PerturbedDraw {
    SpatialModel model;
    std::vector<double> u0;
    std::vector<double> u0_pair; // empty unless requested
};

PerturbedDraw draw_admissible(const PerturbationEnvelope& env, const KernelSpec& kernel,
                              const TorusGrid& grid, const std::map<int, double>& base_b,
                              bool with_pairs, Rng& rng);

/// Constant fields at the extremes that saturate the upper (or lower) m1 envelope.
PerturbedDraw extremal_draw(const PerturbationEnvelope& env, const KernelSpec& kernel,
                            const TorusGrid& grid, const std::map<int, double>& base_b, bool upper);

/// A system given by explicit per-site tables (mu = v + beta of base_b).
PerturbedDraw explicit_draw(const KernelSpec& kernel, const TorusGrid& grid,
                            const std::map<int, double>& base_b, std::vector<double> v,
                            std::vector<double> k, std::vector<double> u0, std::vector<double> u0_pair);

/// Tables of the pair equation at one instant, for m1 given on the sites:
///   V(x,y) = v(x) + v(y)
///   F(x)   = m1(x)(mu(x) + sum (n-1)^2 b_n(x)) + k(x) + kappa L_a m1(x)
///   f(x,y) = k(x) m1(y) + k(y) m1(x) + delta_x(y) F(x) - kappa a(x-y)(m1(x) + m1(y))
/// with a(0) = -1, so the diagonal of f carries +2 kappa m1(x).
struct PairSources {
    std::vector<double> V; // |sites|^2, row-major
    std::vector<double> F; // |sites|
    std::vector<double> f; // |sites|^2
};

PairSources second_moment_functions(const SpatialModel& model, std::span<const double> m1);

/// Generator scales: m1 uses m1_scale * L_a, the pair field uses
/// pair_scale * (L_ax + L_ay).
struct GeneratorScales {
    double m1_scale = 1.0;
    double pair_scale = 1.0;
};

enum class PairSource {
    full,       // f
    no_delta,   // f without the delta_x(y) F part
    delta_only, // delta_x(y) F only (defines L)
    none,       // f = 0 (the G piece)
};

struct PairTrajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> m1;   // per time, |sites|
    std::vector<std::vector<double>> pair; // per time, |sites|^2
};

/// Solves m1 together with the pair field w:
///   dm1/dt = m1_scale L_a m1 - v m1 + k,
///   dw/dt  = pair_scale (L_ax + L_ay) w - V w + source(m1),
/// with w(0) = pair_initial (zero table if empty).
PairTrajectory solve_pair_system(const SpatialModel& model, std::span<const double> m1_initial,
                                 std::span<const double> pair_initial, PairSource source,
                                 const GeneratorScales& scales, std::span<const double> times,
                                 const StepControl& control = {});

/// L(t,x,y): pair problem with source delta_x(y) F, zero initial data.
PairTrajectory compute_L(const SpatialModel& model, std::span<const double> m1_initial,
                         const GeneratorScales& scales, std::span<const double> times,
                         const StepControl& control = {});

/// Worst (smallest-margin) sample of one draw at one output time.
struct BoundSample {
    std::size_t draw = 0;
    double t = 0.0;
    Site site = 0; // pair index x |sites| + y for second-moment checks
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double margin = 0.0; // min(value - lower, upper - value)
    bool pass = false;
};

struct StabilityOptions {
    std::size_t trials = 100;
    double horizon = 10.0;
    double output_step = 0.1;
    GeneratorScales scales;
    std::map<int, double> base_b;
    std::uint64_t seed = 1;
    std::size_t threads = 0;
    /// Numerical slack granted to the comparison (ODE step-control level).
    double slack = 1e-8;
    StepControl control;
};

struct StabilityReport {
    std::vector<BoundSample> samples;
    std::size_t violations = 0;
    double worst_margin = 0.0;
    bool ok() const { return violations == 0; }
};

/// Per-output-time worst samples of one system against the m1 envelope / the [A, B] window.
std::vector<BoundSample> check_m1_draw(const PerturbedDraw& draw, const PerturbationEnvelope& env,
                                       std::size_t draw_index, const StabilityOptions& options);
std::vector<BoundSample> check_m2_draw(const PerturbedDraw& draw, const PerturbationEnvelope& env,
                                       std::size_t draw_index, const StabilityOptions& options);

/// m1 of `trials` admissible draws against m1_envelope at every output time and site.
StabilityReport verify_m1_stability(const PerturbationEnvelope& env, const KernelSpec& kernel,
                                    const TorusGrid& grid, const StabilityOptions& options);

/// m2 - L - k0^2/v0^2 of `trials` admissible draws against [A, B].
StabilityReport verify_m2_stability(const PerturbationEnvelope& env, const KernelSpec& kernel,
                                    const TorusGrid& grid, const StabilityOptions& options);

/// Output grid 0, step, 2 step, ..., horizon.
std::vector<double> output_times(double horizon, double step);

} // namespace brw
