#include "brw/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "brw/feynman_kac.hpp"
#include "brw/hierarchy.hpp"
#include "brw/lyapunov.hpp"
#include "brw/moments.hpp"
#include "brw/simulator.hpp"

namespace brw {

namespace {

std::string offset_label(const LatticeOffset& u)
{
    std::string s;
    for (std::size_t i = 0; i < u.coords.size(); ++i) s += (i ? ":" : "") + std::to_string(u.coords[i]);
    return s;
}

std::string tuple_label(std::span<const Site> t)
{
    std::string s;
    for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ":" : "") + std::to_string(t[i]);
    return s;
}

EnsembleResult ensemble_of(const ExperimentConfig& c)
{
    EnsembleOptions opt;
    opt.threads = c.run.threads;
    opt.force_equal_seeds = c.run.force_equal_seeds;
    opt.explosion_cap = c.run.explosion_cap;
    return run_ensemble(c.model, c.grid, c.run.horizon, c.run.snapshots, c.run.replicas, c.run.master_seed,
                        opt);
}

// ---------------------------------------------------------------------------

TaskResult task_validate(const ExperimentConfig& c)
{
    TaskResult r;
    Table t{"validation", {"check", "result"}, {}};
    const std::string kernel = validate_kernel(c.model.kernel).summary();
    const std::string law = validate_law(c.model.law).summary();
    const std::string crit = to_string(classify_criticality(c.model.law));
    t.add({std::string("kernel"), kernel});
    t.add({std::string("law"), law});
    t.add({std::string("criticality"), crit});
    r.tables.push_back(std::move(t));
    r.messages.push_back("kernel " + kernel + ", law " + law + ", " + crit);
    return r;
}

TaskResult task_simulate(const ExperimentConfig& c)
{
    const EnsembleResult ens = ensemble_of(c);
    Table t{"ensemble", {"t", "stat", "offset", "mean", "se"}, {}};
    const LatticeOffset zero{std::vector<int>(c.grid.dimension(), 0)};
    for (double time : ens.ensemble.times()) {
        const StatEstimate m1 = estimate_moment(ens.ensemble, time, {});
        t.add({time, std::string("m1"), offset_label(zero), m1.mean, m1.se});
        for (const auto& u : c.run.offsets) {
            const StatEstimate m2 = estimate_moment(ens.ensemble, time, std::span(&u, 1));
            t.add({time, std::string("m2"), offset_label(u), m2.mean, m2.se});
        }
    }
    TaskResult r;
    r.tables.push_back(std::move(t));
    r.messages.push_back("simulated " + std::to_string(c.run.replicas) + " replicas");
    return r;
}

TaskResult task_moments(const ExperimentConfig& c)
{
    const EnsembleResult ens = ensemble_of(c);
    const FirstMomentCurve m1 = FirstMomentCurve::from(c.model);
    const bool subcritical = classify_criticality(c.model.law) == Criticality::subcritical;

    // Analytic m2: closed form when subcritical, the order-2 hierarchy otherwise.
    std::vector<std::vector<double>> m2_tables;
    if (subcritical) {
        for (double time : c.run.snapshots) m2_tables.push_back(m2_transient(c.model, c.grid, time).m2);
    } else {
        const auto op = HierarchyOperator::assemble(2, c.model, c.grid);
        const auto y0 = op.initial_state(c.model.init);
        StepControl ctl;
        ctl.tolerance = c.tolerances.ode;
        const auto tr = integrate(op, y0, c.run.snapshots, ctl);
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
            const MomentTensor m = tr.tensor(2, i);
            std::vector<double> row(c.grid.size());
            for (Site u = 0; u < c.grid.size(); ++u) row[u] = m.values[u]; // tuple (0, u)
            m2_tables.push_back(std::move(row));
        }
    }

    Table t{"moments", {"t", "stat", "offset", "mc_mean", "mc_se", "analytic", "abs_diff"}, {}};
    const LatticeOffset zero{std::vector<int>(c.grid.dimension(), 0)};
    std::size_t within = 0, total = 0;
    auto add = [&](double time, const char* stat, const LatticeOffset& u, const StatEstimate& e, double a) {
        const double diff = std::abs(e.mean - a);
        t.add({time, std::string(stat), offset_label(u), e.mean, e.se, a, diff});
        ++total;
        if (diff <= c.tolerances.mc_sigma * e.se) ++within;
    };
    for (std::size_t i = 0; i < c.run.snapshots.size(); ++i) {
        const double time = c.run.snapshots[i];
        add(time, "m1", zero, estimate_moment(ens.ensemble, time, {}), m1(time));
        for (const auto& u : c.run.offsets)
            add(time, "m2", u, estimate_moment(ens.ensemble, time, std::span(&u, 1)), m2_tables[i][c.grid.site_of(u)]);
    }
    TaskResult r;
    r.tables.push_back(std::move(t));
    r.messages.push_back(std::to_string(within) + " of " + std::to_string(total) + " rows within " +
                         format_number(c.tolerances.mc_sigma) + " SE");
    return r;
}

TaskResult task_steady_state(const ExperimentConfig& c)
{
    const SeriesResult series = m2_steady_state_series(c.model, c.grid, c.tolerances.series);
    const std::vector<double> fourier = m2_steady_state_fourier(c.model, c.grid);
    const std::vector<double> cov = steady_covariance(c.model, c.grid);
    const int d = c.grid.dimension();

    std::vector<std::string> ucols;
    if (d == 1)
        ucols = {"u"};
    else
        for (int i = 0; i < d; ++i) ucols.push_back("u" + std::to_string(i));

    // Rows ordered by the folded offset.
    std::vector<std::pair<LatticeOffset, Site>> order;
    for (Site s = 0; s < c.grid.size(); ++s) order.emplace_back(c.grid.displacement(0, s), s);
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.first.coords < b.first.coords; });

    std::vector<std::string> cols = ucols;
    cols.insert(cols.end(), {"m2_series", "m2_fourier", "abs_diff"});
    Table steady{"m2_steady", cols, {}};
    std::vector<std::string> ccols = ucols;
    ccols.push_back("cov");
    Table covt{"steady_cov", ccols, {}};
    double worst = 0.0;
    for (const auto& [u, s] : order) {
        std::vector<Cell> row, crow;
        for (int c0 : u.coords) {
            row.emplace_back(static_cast<std::int64_t>(c0));
            crow.emplace_back(static_cast<std::int64_t>(c0));
        }
        const double diff = std::abs(series.values[s] - fourier[s]);
        worst = std::max(worst, diff);
        row.insert(row.end(), {series.values[s], fourier[s], diff});
        crow.emplace_back(cov[s]);
        steady.add(std::move(row));
        covt.add(std::move(crow));
    }
    TaskResult r;
    r.tables.push_back(std::move(steady));
    r.tables.push_back(std::move(covt));
    r.messages.push_back("series terms " + std::to_string(series.terms) + ", max |series - fourier| " +
                         format_number(worst));
    return r;
}

TaskResult task_hierarchy(const ExperimentConfig& c)
{
    const int n = c.hierarchy.order;
    double unknowns = 0.0;
    for (int j = 1; j <= n; ++j) unknowns += std::pow(static_cast<double>(c.grid.size()), j);
    if (unknowns > 2e6) throw ConfigError("hierarchy system too large for this torus and order");
    const auto op = HierarchyOperator::assemble(n, c.model, c.grid);
    const auto y0 = op.initial_state(c.model.init);
    StepControl ctl;
    ctl.tolerance = c.tolerances.ode;
    const auto tr = integrate(op, y0, c.hierarchy.times, ctl);

    const FirstMomentCurve m1 = FirstMomentCurve::from(c.model);
    const bool subcritical = classify_criticality(c.model.law) == Criticality::subcritical;
    const double nan = std::nan("");
    Table t{"hierarchy", {"t", "order", "sites", "value", "analytic", "abs_diff"}, {}};
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const double time = tr.times[i];
        std::vector<double> m2;
        if (subcritical && n >= 2) m2 = m2_transient(c.model, c.grid, time).m2;
        for (int j = 1; j <= n; ++j) {
            const MomentTensor m = tr.tensor(j, i);
            std::vector<Site> tuple(j, 0);
            // Nondecreasing tuples only; the tensor is permutation symmetric.
            while (true) {
                const double value = m.at(tuple);
                double analytic = nan;
                if (j == 1) analytic = m1(time);
                if (j == 2 && !m2.empty()) analytic = m2[c.grid.site_of(c.grid.displacement(tuple[0], tuple[1]))];
                t.add({time, static_cast<std::int64_t>(j), tuple_label(tuple), value, analytic,
                       std::abs(value - analytic)});
                int pos = j - 1;
                while (pos >= 0 && tuple[pos] + 1 == c.grid.size()) --pos;
                if (pos < 0) break;
                ++tuple[pos];
                for (int q = pos + 1; q < j; ++q) tuple[q] = tuple[pos];
            }
        }
    }
    TaskResult r;
    r.tables.push_back(std::move(t));
    r.messages.push_back("integrated order " + std::to_string(n) + " with h = " + format_number(tr.step));
    return r;
}

TaskResult task_fk(const ExperimentConfig& c)
{
    const std::size_t S = c.grid.size();
    const std::uint64_t seed = c.run.master_seed;
    const double scale = c.fk.scale.value_or(c.model.kappa());
    const ParabolicProblem problem(c.model.kernel, c.grid, scale, materialize(c.fk.potential, S, seed, 101),
                                   SourceTerm::constant(materialize(c.fk.source, S, seed, 102)),
                                   materialize(c.fk.initial, S, seed, 103));
    StepControl ctl;
    ctl.tolerance = c.tolerances.ode;
    const std::vector<double> direct = solve_direct(problem, c.fk.t, ctl);

    Table t{"fk", {"site", "direct", "mc_mean", "mc_se", "abs_diff"}, {}};
    std::size_t within = 0;
    for (Site x : c.fk.sites) {
        const PathEstimate e = solve_fk_mc(problem, c.fk.t, x, c.fk.paths, stream_seed(seed, 1000 + x), c.run.threads);
        const double diff = std::abs(e.mean - direct[x]);
        if (diff <= c.tolerances.mc_sigma * e.se) ++within;
        t.add({static_cast<std::int64_t>(x), direct[x], e.mean, e.se, diff});
    }
    TaskResult r;
    r.tables.push_back(std::move(t));
    r.messages.push_back(std::to_string(within) + " of " + std::to_string(c.fk.sites.size()) + " sites within " +
                         format_number(c.tolerances.mc_sigma) + " SE");
    return r;
}

TaskResult task_lyapunov(const ExperimentConfig& c, bool second)
{
    if (!c.spatial) throw ConfigError("task needs a 'spatial' block");
    const SpatialBlock& sp = *c.spatial;
    const double kappa = c.model.kappa();
    StabilityOptions opt;
    opt.trials = sp.trials;
    opt.horizon = sp.horizon;
    opt.output_step = sp.output_step;
    opt.scales.m1_scale = sp.m1_scale_kappa ? kappa : 1.0;
    opt.scales.pair_scale = sp.pair_diffusion_kappa ? kappa : 1.0;
    opt.base_b = sp.base_b.empty() ? c.model.law.b : sp.base_b;
    opt.seed = c.run.master_seed;
    opt.threads = c.run.threads;
    opt.slack = c.tolerances.bound_slack;
    opt.control.tolerance = c.tolerances.ode;

    std::vector<BoundSample> samples;
    if (sp.v) {
        const std::size_t S = c.grid.size();
        std::vector<double> pair = sp.u0_pair.value_or(std::vector<double>{});
        if (second && pair.empty()) pair.assign(S * S, sp.envelope.u0_pair);
        const PerturbedDraw draw = explicit_draw(c.model.kernel, c.grid, opt.base_b, *sp.v, *sp.k, *sp.u0, pair);
        const AssumptionReport check = check_assumptions(draw.model, sp.envelope, draw.u0, draw.u0_pair);
        if (!check.ok) throw ConfigError("assumptions " + check.message());
        samples = second ? check_m2_draw(draw, sp.envelope, 0, opt) : check_m1_draw(draw, sp.envelope, 0, opt);
    } else {
        const StabilityReport rep = second ? verify_m2_stability(sp.envelope, c.model.kernel, c.grid, opt)
                                           : verify_m1_stability(sp.envelope, c.model.kernel, c.grid, opt);
        samples = rep.samples;
    }

    Table t{"lyapunov", {"draw", "t", "site", "value", "lower", "upper", "margin", "pass"}, {}};
    std::size_t violations = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        t.add({static_cast<std::int64_t>(s.draw), s.t, static_cast<std::int64_t>(s.site), s.value, s.lower, s.upper,
               s.margin, s.pass});
        if (!s.pass) ++violations;
        worst = std::min(worst, s.margin);
    }
    TaskResult r;
    r.tables.push_back(std::move(t));
    r.messages.push_back(std::string(second ? "second" : "first") + "-moment envelope: " +
                         std::to_string(violations) + " violations in " + std::to_string(samples.size()) +
                         " samples, worst margin " + format_number(worst));
    return r;
}

} // namespace

TaskResult run_task(const std::string& task, const ExperimentConfig& config)
{
    if (task == "validate") return task_validate(config);
    if (task == "simulate") return task_simulate(config);
    if (task == "moments") return task_moments(config);
    if (task == "steady-state") return task_steady_state(config);
    if (task == "hierarchy") return task_hierarchy(config);
    if (task == "fk") return task_fk(config);
    if (task == "lyapunov-m1") return task_lyapunov(config, false);
    if (task == "lyapunov-m2") return task_lyapunov(config, true);
    throw ConfigError("unknown task '" + task + "'");
}

int run(const RunRequest& request, std::ostream& log)
{
    const auto start = std::chrono::steady_clock::now();
    try {
        ExperimentConfig config = load_config(request.config);
        if (config.task && *config.task != request.task)
            throw ConfigError("config task '" + *config.task + "' differs from requested task '" + request.task + "'");
        if (std::find(kTasks.begin(), kTasks.end(), request.task) == kTasks.end())
            throw ConfigError("unknown task '" + request.task + "'");
        config.effective["task"] = request.task;
        apply_overrides(config, request.seed, request.replicas);
        const RunStamp stamp{config.run.master_seed, config_hash(config)};

        const TaskResult result = run_task(request.task, config);
        std::vector<std::string> files;
        for (const auto& table : result.tables)
            for (const auto& p : emit_report(table, request.out, config.formats, stamp))
                files.push_back(p.filename().string());

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        nlohmann::ordered_json manifest;
        manifest["task"] = request.task;
        manifest["config"] = config.effective;
        manifest["config_hash"] = stamp.config_hash;
        manifest["master_seed"] = stamp.master_seed;
        manifest["version"] = BRW_VERSION;
        manifest["wall_time_seconds"] = wall;
        manifest["files"] = files;
        manifest["summary"] = result.messages;
        const auto path = request.out / "manifest.json";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << manifest.dump(2) << '\n';
        if (!out) throw std::runtime_error("write failed for " + path.string());

        for (const auto& m : result.messages) log << m << '\n';
        return kExitOk;
    } catch (const NumericalFailure& e) {
        log << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const InvalidArgument& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::runtime_error& e) {
        log << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

} // namespace brw
