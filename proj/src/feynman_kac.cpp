#include "brw/feynman_kac.hpp"

#include <array>
#include <cmath>

#include "brw/dft.hpp"
#include "brw/parallel.hpp"
#include "brw/simulator.hpp"

namespace brw {

SourceTerm SourceTerm::constant(std::vector<double> table)
{
    SourceTerm s;
    s.table_ = std::move(table);
    return s;
}

SourceTerm SourceTerm::time_dependent(Function f)
{
    SourceTerm s;
    s.fn_ = std::move(f);
    return s;
}

double SourceTerm::operator()(double t, Site x) const
{
    if (fn_) return fn_(t, x);
    return table_.empty() ? 0.0 : table_[x];
}

ParabolicProblem::ParabolicProblem(KernelSpec kernel, TorusGrid grid, double scale,
                                   std::vector<double> v, SourceTerm f, std::vector<double> u0)
    : kernel_(std::move(kernel)), grid_(std::move(grid)), scale_(scale), v_(std::move(v)),
      f_(std::move(f)), u0_(std::move(u0))
{
    grid_.require_fits(kernel_);
    if (!(scale_ >= 0.0) || !std::isfinite(scale_)) throw InvalidArgument("generator scale must be >= 0");
    if (v_.size() != grid_.size()) throw InvalidArgument("potential table size differs from the torus");
    if (u0_.size() != grid_.size()) throw InvalidArgument("initial table size differs from the torus");
    for (double x : v_)
        if (!std::isfinite(x)) throw InvalidArgument("potential must be bounded");
    for (double x : u0_)
        if (!std::isfinite(x)) throw InvalidArgument("initial data must be bounded");
    if (f_.time_independent())
        for (Site x = 0; x < grid_.size(); ++x)
            if (!std::isfinite(f_(0.0, x))) throw InvalidArgument("source must be bounded");
}

std::vector<double> transition_matrix(const KernelSpec& kernel, const TorusGrid& grid, double t)
{
    return transition_matrix(kernel, grid, t, kernel.kappa);
}

std::vector<double> transition_matrix(const KernelSpec& kernel, const TorusGrid& grid, double t,
                                      double scale)
{
    if (t < 0.0) throw InvalidArgument("time must be >= 0");
    grid.require_fits(kernel);
    const std::vector<double> ahat = symbol_on_grid(kernel, grid);
    std::vector<double> spectrum(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) spectrum[j] = std::exp(t * scale * (ahat[j] - 1.0));
    const std::vector<double> p = dft_inverse_real(grid, spectrum);

    const std::size_t S = grid.size();
    std::vector<double> out(S * S);
    for (Site x = 0; x < S; ++x) {
        const auto cx = grid.coords(x);
        for (Site y = 0; y < S; ++y) {
            auto cy = grid.coords(y);
            for (std::size_t i = 0; i < cy.size(); ++i) cy[i] -= cx[i];
            out[x * S + y] = p[grid.index(cy)];
        }
    }
    return out;
}

namespace {

OdeRhs direct_rhs(const ParabolicProblem& problem, const JumpTable& walk)
{
    return [&problem, &walk](double t, std::span<const double> u, std::span<double> du) {
        walk.apply(u, du);
        const auto& v = problem.potential();
        const auto& f = problem.source();
        for (Site x = 0; x < u.size(); ++x) du[x] += -v[x] * u[x] + f(t, x);
    };
}

} // namespace

OdeSolution solve_direct_trajectory(const ParabolicProblem& problem, std::span<const double> times,
                                    const StepControl& control)
{
    const JumpTable walk = JumpTable::from_kernel(problem.kernel(), problem.grid(), problem.scale());
    return rk4_controlled(direct_rhs(problem, walk), problem.initial(), 0.0, times, control);
}

std::vector<double> solve_direct(const ParabolicProblem& problem, double t, const StepControl& control)
{
    if (t < 0.0) throw InvalidArgument("time must be >= 0");
    const double times[1] = {t};
    return std::move(solve_direct_trajectory(problem, times, control).states.front());
}

namespace {

constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                               0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665,
                                                 0.5688888888888889, 0.4786286704993665,
                                                 0.2369268850561891};

// int_{s0}^{s1} f(t - s, y) e^{-(I + v (s - s0))} ds along one holding segment.
double segment_source(const SourceTerm& f, double t, Site y, double v, double I, double s0, double s1)
{
    const double len = s1 - s0;
    if (len <= 0.0 || f.is_zero()) return 0.0;
    if (f.time_independent()) {
        const double fy = f(0.0, y);
        if (fy == 0.0) return 0.0;
        const double factor = (v == 0.0) ? len : -std::expm1(-v * len) / v;
        return fy * std::exp(-I) * factor;
    }
    const int panels = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
    const double h = len / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = s0 + (p + 0.5) * h;
        for (std::size_t i = 0; i < kGaussNodes.size(); ++i) {
            const double s = mid + 0.5 * h * kGaussNodes[i];
            acc += kGaussWeights[i] * f(t - s, y) * std::exp(-(I + v * (s - s0)));
        }
    }
    return acc * 0.5 * h;
}

} // namespace

PathEstimate solve_fk_mc(const ParabolicProblem& problem, double t, Site x, std::size_t paths,
                         std::uint64_t seed, std::size_t threads)
{
    if (paths < 100) throw InvalidArgument("Feynman-Kac estimate needs at least 100 paths");
    if (t < 0.0) throw InvalidArgument("time must be >= 0");
    if (x >= problem.grid().size()) throw InvalidArgument("site outside the torus");

    const JumpTable walk = JumpTable::from_kernel(problem.kernel(), problem.grid(), problem.scale());
    const double rate = walk.total_rate();
    const auto& v = problem.potential();
    const auto& f = problem.source();
    const auto& u0 = problem.initial();

    std::vector<double> values(paths);
    parallel_for(paths, resolve_thread_count(threads), [&](std::size_t i) {
        Rng rng = make_stream(seed, i);
        std::exponential_distribution<double> hold(rate > 0.0 ? rate : 1.0);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        Site y = x;
        double s = 0.0;
        double I = 0.0; // int_0^s v(x(r)) dr
        double source = 0.0;
        while (s < t) {
            const double next = rate > 0.0 ? s + hold(rng) : t;
            const double end = std::min(next, t);
            source += segment_source(f, t, y, v[y], I, s, end);
            I += v[y] * (end - s);
            s = end;
            if (s < t) y = walk.neighbor(y, walk.pick(uniform(rng) * rate));
        }
        values[i] = std::exp(-I) * u0[y] + source;
    });

    const StatEstimate est = summarize(values);
    return {est.mean, est.se, paths};
}

} // namespace brw
