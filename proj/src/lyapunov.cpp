#include "brw/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "brw/feynman_kac.hpp"

namespace brw {

void PerturbationEnvelope::validate() const
{
    if (!(v0 > 0.0)) throw InvalidArgument("envelope v0 must be > 0");
    if (!(k0 > 0.0)) throw InvalidArgument("envelope k0 must be > 0");
    if (!(u0 >= 0.0)) throw InvalidArgument("envelope u0 must be >= 0");
    if (!(u0_pair >= 0.0)) throw InvalidArgument("envelope u0_pair must be >= 0");
    if (!(epsilon >= 0.0)) throw InvalidArgument("envelope epsilon must be >= 0");
    if (epsilon > 0.5 * std::min(k0, v0))
        throw InvalidArgument("envelope epsilon must not exceed min(k0, v0)/2");
}

std::string AssumptionReport::message() const
{
    if (ok) return "pass";
    std::ostringstream os;
    os << "fail: " << field << " = " << value << " outside its window at site " << site;
    if (field == "u0_pair") os << ',' << site2;
    return os.str();
}

AssumptionReport check_assumptions(const SpatialModel& model, const PerturbationEnvelope& env,
                                   std::span<const double> u0, std::span<const double> u0_pair)
{
    const std::size_t S = model.grid.size();
    if (u0.size() != S) throw InvalidArgument("u0 table size differs from the torus");
    if (!u0_pair.empty() && u0_pair.size() != S * S)
        throw InvalidArgument("u0_pair table must have |sites|^2 entries");
    const double eps = env.epsilon;
    auto outside = [eps](double x, double center) { return x < center - eps || x > center + eps; };

    AssumptionReport r;
    auto fail = [&r](const char* field, Site x, Site y, double value) {
        r.ok = false;
        r.field = field;
        r.site = x;
        r.site2 = y;
        r.value = value;
        return r;
    };
    for (Site x = 0; x < S; ++x)
        if (outside(model.v(x), env.v0)) return fail("v", x, x, model.v(x));
    for (Site x = 0; x < S; ++x)
        if (outside(model.k[x], env.k0)) return fail("k", x, x, model.k[x]);
    for (Site x = 0; x < S; ++x)
        if (outside(u0[x], env.u0)) return fail("u0", x, x, u0[x]);
    for (Site i = 0; i < u0_pair.size(); ++i)
        if (outside(u0_pair[i], env.u0_pair)) return fail("u0_pair", i / S, i % S, u0_pair[i]);
    return r;
}

Interval m1_envelope(const PerturbationEnvelope& env, double u0, double t)
{
    const double eps = env.epsilon;
    if (eps >= env.v0) throw InvalidArgument("envelope epsilon must be below v0");
    const double ap = env.v0 - eps;
    const double am = env.v0 + eps;
    const double Pp = (env.k0 + eps) / ap;
    const double Pm = (env.k0 - eps) / am;
    return {Pm + std::exp(-am * t) * (u0 - eps - Pm), Pp + std::exp(-ap * t) * (u0 + eps - Pp)};
}

EnvelopeBounds::EnvelopeBounds(const PerturbationEnvelope& env, double kappa)
    : env_(env), kappa_(kappa)
{
    env_.validate();
    const double eps = env.epsilon;
    const double k0 = env.k0;
    const double v0 = env.v0;
    ap_ = v0 - eps;
    am_ = v0 + eps;
    const double Pp = (k0 + eps) / ap_;
    const double Pm = (k0 - eps) / am_;
    const double Qp = env.u0 + eps - Pp;
    const double Qm = env.u0 - eps - Pm;
    C0p = Pp;
    C1p = Qp;
    C0m = Pm;
    C1m = Qm;

    const double base = k0 * k0 / (v0 * v0);
    const double kappa_term = kappa * k0 / (v0 * v0);
    const double cp = k0 + eps + kappa;
    const double Kp = cp * Pp / ap_;
    C2p = 2.0 * cp * Qp / ap_;
    C3p = env.u0_pair + eps - Kp - C2p + kappa_term;
    C4p_eps = Kp - base - kappa_term;

    const double cm = k0 - eps;
    const double Km = cm * Pm / am_;
    C2m = 2.0 * cm * Qm / am_;
    C3m = env.u0_pair - eps - Km - C2m;
    C4m_eps = Km - base;
    drain = kappa * Pp / ap_;
    cross = 2.0 * kappa * Qp / ap_;
}

Interval EnvelopeBounds::m1(double t) const
{
    return {C0m + C1m * std::exp(-am_ * t), C0p + C1p * std::exp(-ap_ * t)};
}

Interval EnvelopeBounds::m2(double t) const
{
    const double ep1 = std::exp(-ap_ * t);
    const double ep2 = std::exp(-2.0 * ap_ * t);
    const double em1 = std::exp(-am_ * t);
    const double em2 = std::exp(-2.0 * am_ * t);
    const double kappa_term = kappa_ * env_.k0 / (env_.v0 * env_.v0);
    const double B = C2p * ep1 + C3p * ep2 + C4p_eps + kappa_term * (1.0 - ep2);
    const double A = C2m * em1 + C3m * em2 + C4m_eps - drain * (1.0 - ep2) - cross * (ep1 - ep2);
    return {A, B};
}

Interval EnvelopeBounds::g_piece(double t) const
{
    const double eps = env_.epsilon;
    return {(env_.u0_pair - eps) * std::exp(-2.0 * am_ * t),
            (env_.u0_pair + eps) * std::exp(-2.0 * ap_ * t)};
}

// ---------------------------------------------------------------------------
// Draws

namespace {

SpatialModel constant_model(const KernelSpec& kernel, const TorusGrid& grid,
                            const std::map<int, double>& base_b, std::span<const double> v,
                            std::span<const double> k)
{
    grid.require_fits(kernel);
    double beta = 0.0;
    for (const auto& [n, bn] : base_b) beta += (n - 1.0) * bn;
    SpatialModel m;
    m.kernel = kernel;
    m.grid = grid;
    m.mu.resize(grid.size());
    for (Site x = 0; x < grid.size(); ++x) m.mu[x] = v[x] + beta;
    for (const auto& [n, bn] : base_b) m.b[n] = std::vector<double>(grid.size(), bn);
    m.k.assign(k.begin(), k.end());
    return m;
}

} // namespace

PerturbedDraw draw_admissible(const PerturbationEnvelope& env, const KernelSpec& kernel,
                              const TorusGrid& grid, const std::map<int, double>& base_b,
                              bool with_pairs, Rng& rng)
{
    env.validate();
    const double eps = env.epsilon;
    if (env.u0 < eps || env.u0_pair < eps)
        throw InvalidArgument("draws need u0 >= epsilon and u0_pair >= epsilon");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto window = [&](double center) { return center - eps + 2.0 * eps * unit(rng); };

    const std::size_t S = grid.size();
    std::vector<double> v(S), k(S);
    PerturbedDraw d;
    for (Site x = 0; x < S; ++x) v[x] = window(env.v0);
    for (Site x = 0; x < S; ++x) k[x] = window(env.k0);
    d.u0.resize(S);
    for (Site x = 0; x < S; ++x) d.u0[x] = window(env.u0);
    if (with_pairs) {
        d.u0_pair.resize(S * S);
        for (Site x = 0; x < S; ++x)
            for (Site y = x; y < S; ++y) d.u0_pair[x * S + y] = d.u0_pair[y * S + x] = window(env.u0_pair);
    }
    d.model = constant_model(kernel, grid, base_b, v, k);
    return d;
}

PerturbedDraw extremal_draw(const PerturbationEnvelope& env, const KernelSpec& kernel,
                            const TorusGrid& grid, const std::map<int, double>& base_b, bool upper)
{
    env.validate();
    const double s = upper ? 1.0 : -1.0;
    const double eps = env.epsilon;
    const std::size_t S = grid.size();
    const std::vector<double> v(S, env.v0 - s * eps), k(S, env.k0 + s * eps);
    PerturbedDraw d;
    d.u0.assign(S, env.u0 + s * eps);
    d.u0_pair.assign(S * S, env.u0_pair + s * eps);
    d.model = constant_model(kernel, grid, base_b, v, k);
    return d;
}

PerturbedDraw explicit_draw(const KernelSpec& kernel, const TorusGrid& grid,
                            const std::map<int, double>& base_b, std::vector<double> v,
                            std::vector<double> k, std::vector<double> u0, std::vector<double> u0_pair)
{
    const std::size_t S = grid.size();
    if (v.size() != S || k.size() != S || u0.size() != S)
        throw InvalidArgument("rate table size differs from the torus");
    if (!u0_pair.empty() && u0_pair.size() != S * S)
        throw InvalidArgument("u0_pair table must have |sites|^2 entries");
    PerturbedDraw d;
    d.model = constant_model(kernel, grid, base_b, v, k);
    d.u0 = std::move(u0);
    d.u0_pair = std::move(u0_pair);
    return d;
}

// ---------------------------------------------------------------------------
// Pair system

namespace {

// Static tables shared by the pair right-hand sides.
struct PairTables {
    std::size_t S = 0;
    JumpTable walk;
    std::vector<double> v, k, mu_sq; // mu(x) + sum (n-1)^2 b_n(x)
    std::vector<double> a_diff;      // a(x - y) per pair, a(0) = -1
    double kappa = 0.0;

    explicit PairTables(const SpatialModel& m)
        : S(m.grid.size()), walk(JumpTable::from_kernel(m.kernel, m.grid, 1.0)), v(m.v_table()),
          k(m.k), kappa(m.kernel.kappa)
    {
        if (m.mu.size() != S || m.k.size() != S) throw InvalidArgument("rate table size differs from the torus");
        for (const auto& [n, table] : m.b)
            if (table.size() != S) throw InvalidArgument("rate table size differs from the torus");
        mu_sq.resize(S);
        for (Site x = 0; x < S; ++x) mu_sq[x] = m.mu[x] + m.sum_sq(x);
        const std::vector<double> a = kernel_table(m.kernel, m.grid);
        a_diff.resize(S * S);
        for (Site x = 0; x < S; ++x) {
            const auto cx = m.grid.coords(x);
            for (Site y = 0; y < S; ++y) {
                if (x == y) {
                    a_diff[x * S + y] = -1.0;
                    continue;
                }
                auto c = m.grid.coords(y);
                for (std::size_t i = 0; i < c.size(); ++i) c[i] = cx[i] - c[i];
                a_diff[x * S + y] = a[m.grid.index(c)];
            }
        }
    }

    double generator(std::span<const double> f, Site x) const
    {
        double s = 0.0;
        for (std::size_t e = 0; e < walk.jump_count(); ++e) s += walk.rate(e) * (f[walk.neighbor(x, e)] - f[x]);
        return s;
    }

    double big_f(std::span<const double> m1, Site x) const
    {
        return m1[x] * mu_sq[x] + k[x] + kappa * generator(m1, x);
    }

    double source(std::span<const double> m1, Site x, Site y, PairSource mode) const
    {
        const bool diagonal = x == y;
        switch (mode) {
        case PairSource::none: return 0.0;
        case PairSource::delta_only: return diagonal ? big_f(m1, x) : 0.0;
        case PairSource::full:
        case PairSource::no_delta: {
            double s = k[x] * m1[y] + k[y] * m1[x] - kappa * a_diff[x * S + y] * (m1[x] + m1[y]);
            if (diagonal && mode == PairSource::full) s += big_f(m1, x);
            return s;
        }
        }
        return 0.0;
    }
};

} // namespace

PairSources second_moment_functions(const SpatialModel& model, std::span<const double> m1)
{
    const PairTables tab(model);
    const std::size_t S = tab.S;
    if (m1.size() != S) throw InvalidArgument("m1 table size differs from the torus");
    PairSources out;
    out.V.resize(S * S);
    out.F.resize(S);
    out.f.resize(S * S);
    for (Site x = 0; x < S; ++x) out.F[x] = tab.big_f(m1, x);
    for (Site x = 0; x < S; ++x)
        for (Site y = 0; y < S; ++y) {
            out.V[x * S + y] = tab.v[x] + tab.v[y];
            out.f[x * S + y] = tab.source(m1, x, y, PairSource::full);
        }
    return out;
}

PairTrajectory solve_pair_system(const SpatialModel& model, std::span<const double> m1_initial,
                                 std::span<const double> pair_initial, PairSource source,
                                 const GeneratorScales& scales, std::span<const double> times,
                                 const StepControl& control)
{
    const PairTables tab(model);
    const std::size_t S = tab.S;
    if (m1_initial.size() != S) throw InvalidArgument("m1 initial table size differs from the torus");
    if (!pair_initial.empty() && pair_initial.size() != S * S)
        throw InvalidArgument("pair initial table must have |sites|^2 entries");

    std::vector<double> y0(S + S * S, 0.0);
    std::copy(m1_initial.begin(), m1_initial.end(), y0.begin());
    std::copy(pair_initial.begin(), pair_initial.end(), y0.begin() + static_cast<std::ptrdiff_t>(S));

    const OdeRhs rhs = [&](double, std::span<const double> y, std::span<double> dy) {
        const auto m1 = y.first(S);
        const auto w = y.subspan(S);
        for (Site x = 0; x < S; ++x)
            dy[x] = scales.m1_scale * tab.generator(m1, x) - tab.v[x] * m1[x] + tab.k[x];
        const std::size_t E = tab.walk.jump_count();
        for (Site x = 0; x < S; ++x) {
            for (Site yy = 0; yy < S; ++yy) {
                const double here = w[x * S + yy];
                double diffusion = 0.0;
                for (std::size_t e = 0; e < E; ++e) {
                    const double r = tab.walk.rate(e);
                    diffusion += r * (w[tab.walk.neighbor(x, e) * S + yy] - here);
                    diffusion += r * (w[x * S + tab.walk.neighbor(yy, e)] - here);
                }
                dy[S + x * S + yy] = scales.pair_scale * diffusion - (tab.v[x] + tab.v[yy]) * here +
                                     tab.source(m1, x, yy, source);
            }
        }
    };

    OdeSolution sol = rk4_controlled(rhs, y0, 0.0, times, control);
    PairTrajectory out;
    out.times = std::move(sol.times);
    for (auto& y : sol.states) {
        out.m1.emplace_back(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(S));
        out.pair.emplace_back(y.begin() + static_cast<std::ptrdiff_t>(S), y.end());
    }
    return out;
}

PairTrajectory compute_L(const SpatialModel& model, std::span<const double> m1_initial,
                         const GeneratorScales& scales, std::span<const double> times,
                         const StepControl& control)
{
    return solve_pair_system(model, m1_initial, {}, PairSource::delta_only, scales, times, control);
}

// ---------------------------------------------------------------------------
// Verification

std::vector<double> output_times(double horizon, double step)
{
    if (!(horizon >= 0.0) || !(step > 0.0)) throw InvalidArgument("need horizon >= 0 and step > 0");
    const auto n = static_cast<std::size_t>(std::llround(horizon / step));
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = (i == n) ? horizon : static_cast<double>(i) * step;
    if (n == 0) t = {0.0, horizon};
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

namespace {

BoundSample worst_sample(std::size_t draw, double t, std::span<const double> values, Interval bound,
                         double slack)
{
    BoundSample s;
    s.draw = draw;
    s.t = t;
    s.lower = bound.lower;
    s.upper = bound.upper;
    s.margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double m = std::min(values[i] - bound.lower, bound.upper - values[i]);
        if (m < s.margin) {
            s.margin = m;
            s.site = i;
            s.value = values[i];
        }
    }
    s.pass = s.margin >= -slack;
    return s;
}

StabilityReport collect(std::vector<std::vector<BoundSample>> per_draw)
{
    StabilityReport r;
    r.worst_margin = std::numeric_limits<double>::infinity();
    for (auto& samples : per_draw)
        for (auto& s : samples) {
            if (!s.pass) ++r.violations;
            r.worst_margin = std::min(r.worst_margin, s.margin);
            r.samples.push_back(s);
        }
    return r;
}

} // namespace

std::vector<BoundSample> check_m1_draw(const PerturbedDraw& draw, const PerturbationEnvelope& env,
                                       std::size_t draw_index, const StabilityOptions& options)
{
    const std::vector<double> times = output_times(options.horizon, options.output_step);
    const auto& m = draw.model;
    const ParabolicProblem problem(m.kernel, m.grid, options.scales.m1_scale, m.v_table(),
                                   SourceTerm::constant(m.k), draw.u0);
    const OdeSolution sol = solve_direct_trajectory(problem, times, options.control);
    std::vector<BoundSample> out;
    for (std::size_t i = 0; i < times.size(); ++i)
        out.push_back(worst_sample(draw_index, times[i], sol.states[i], m1_envelope(env, env.u0, times[i]),
                                   options.slack));
    return out;
}

std::vector<BoundSample> check_m2_draw(const PerturbedDraw& draw, const PerturbationEnvelope& env,
                                       std::size_t draw_index, const StabilityOptions& options)
{
    if (draw.u0_pair.empty()) throw InvalidArgument("second-moment check needs u0_pair");
    const EnvelopeBounds bounds(env, draw.model.kernel.kappa);
    const std::vector<double> times = output_times(options.horizon, options.output_step);
    const double base = env.k0 * env.k0 / (env.v0 * env.v0);
    const PairTrajectory full = solve_pair_system(draw.model, draw.u0, draw.u0_pair, PairSource::full,
                                                  options.scales, times, options.control);
    const PairTrajectory L = compute_L(draw.model, draw.u0, options.scales, times, options.control);
    std::vector<BoundSample> out;
    std::vector<double> value;
    for (std::size_t i = 0; i < times.size(); ++i) {
        value.resize(full.pair[i].size());
        for (std::size_t j = 0; j < value.size(); ++j) value[j] = full.pair[i][j] - L.pair[i][j] - base;
        out.push_back(worst_sample(draw_index, times[i], value, bounds.m2(times[i]), options.slack));
    }
    return out;
}

StabilityReport verify_m1_stability(const PerturbationEnvelope& env, const KernelSpec& kernel,
                                    const TorusGrid& grid, const StabilityOptions& options)
{
    env.validate();
    std::vector<std::vector<BoundSample>> per_draw(options.trials);
    parallel_for(options.trials, resolve_thread_count(options.threads), [&](std::size_t d) {
        Rng rng = make_stream(options.seed, d);
        per_draw[d] = check_m1_draw(draw_admissible(env, kernel, grid, options.base_b, false, rng), env, d, options);
    });
    return collect(std::move(per_draw));
}

StabilityReport verify_m2_stability(const PerturbationEnvelope& env, const KernelSpec& kernel,
                                    const TorusGrid& grid, const StabilityOptions& options)
{
    env.validate();
    std::vector<std::vector<BoundSample>> per_draw(options.trials);
    parallel_for(options.trials, resolve_thread_count(options.threads), [&](std::size_t d) {
        Rng rng = make_stream(options.seed, d);
        per_draw[d] = check_m2_draw(draw_admissible(env, kernel, grid, options.base_b, true, rng), env, d, options);
    });
    return collect(std::move(per_draw));
}

} // namespace brw
