#include "brw/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "brw/relations.hpp"

namespace brw {

std::int64_t FieldState::total() const
{
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

// ---------------------------------------------------------------------------
// FieldSimulator

FieldSimulator::FieldSimulator(const ModelParams& params, FieldState initial)
    : params_(params), state_(std::move(initial)),
      jumps_(JumpTable::from_kernel(params.kernel, state_.grid, params.kernel.kappa))
{
    const auto rates = derived_rates(params_.law);
    for (const auto& [n, bn] : params_.law.b)
        if (bn > 0.0) branch_.emplace_back(n, bn);
    particle_rate_ = jumps_.total_rate() + params_.law.mu + rates.branch_total;

    if (state_.counts.size() != state_.grid.size())
        throw InvalidArgument("field size does not match the torus");
    tree_.assign(state_.grid.size() + 1, 0);
    for (Site x = 0; x < state_.counts.size(); ++x) {
        if (state_.counts[x] < 0) throw InvalidArgument("negative particle count");
        for (std::size_t i = x + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += state_.counts[x];
        total_ += state_.counts[x];
    }
}

void FieldSimulator::add(Site x, std::int64_t delta)
{
    state_.counts[x] += delta;
    total_ += delta;
    for (std::size_t i = x + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
}

// Smallest site whose prefix count exceeds rank.
Site FieldSimulator::find_particle_site(std::int64_t rank) const
{
    std::size_t pos = 0;
    std::size_t step = std::bit_floor(tree_.size() - 1);
    for (; step > 0; step >>= 1) {
        const std::size_t next = pos + step;
        if (next < tree_.size() && tree_[next] <= rank) {
            pos = next;
            rank -= tree_[next];
        }
    }
    return pos;
}

double FieldSimulator::site_rate(Site x) const
{
    return static_cast<double>(state_.counts[x]) * particle_rate_ + params_.k;
}

double FieldSimulator::total_rate() const
{
    return static_cast<double>(total_) * particle_rate_ +
           params_.k * static_cast<double>(state_.grid.size());
}

std::optional<double> FieldSimulator::next_event_time(Rng& rng)
{
    const double rate = total_rate();
    if (!(rate > 0.0)) return std::nullopt;
    std::exponential_distribution<double> wait(rate);
    return state_.time + wait(rng);
}

Event FieldSimulator::fire(double time, Rng& rng)
{
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double particle_total = static_cast<double>(total_) * particle_rate_;
    const double u = uniform(rng) * total_rate();

    Event ev;
    ev.time = time;
    state_.time = time;

    if (u >= particle_total || total_ == 0) {
        std::uniform_int_distribution<Site> pick_site(0, state_.grid.size() - 1);
        ev.kind = EventKind::immigration;
        ev.site = pick_site(rng);
        add(ev.site, 1);
        return ev;
    }

    std::uniform_int_distribution<std::int64_t> pick_particle(0, total_ - 1);
    const Site x = find_particle_site(pick_particle(rng));
    ev.site = x;

    double v = uniform(rng) * particle_rate_;
    if (v < jumps_.total_rate()) {
        const std::size_t e = jumps_.pick(v);
        ev.kind = EventKind::jump;
        ev.target = jumps_.neighbor(x, e);
        add(x, -1);
        add(ev.target, 1);
        return ev;
    }
    v -= jumps_.total_rate();
    if (v < params_.law.mu || branch_.empty()) {
        ev.kind = EventKind::death;
        add(x, -1);
        return ev;
    }
    v -= params_.law.mu;
    std::size_t choice = branch_.size() - 1;
    for (std::size_t i = 0; i < branch_.size(); ++i) {
        if (v < branch_[i].second) {
            choice = i;
            break;
        }
        v -= branch_[i].second;
    }
    ev.kind = EventKind::branch;
    ev.offspring = branch_[choice].first;
    add(x, ev.offspring - 1);
    return ev;
}

std::optional<Event> FieldSimulator::step(Rng& rng)
{
    const auto t = next_event_time(rng);
    if (!t) return std::nullopt;
    return fire(*t, rng);
}

std::optional<Event> step_event(FieldState& state, const ModelParams& params, Rng& rng)
{
    FieldSimulator sim(params, state);
    auto ev = sim.step(rng);
    if (ev) state = sim.state();
    return ev;
}

FieldState initial_field(const ModelParams& params, const TorusGrid& grid, Rng& rng)
{
    FieldState s{grid, std::vector<std::int64_t>(grid.size(), 0), 0.0};
    const double value = params.init.value;
    if (params.init.kind == InitialCondition::Kind::constant) {
        if (value < 0.0 || std::floor(value) != value)
            throw InvalidArgument("constant initial value must be a nonnegative integer to simulate");
        std::fill(s.counts.begin(), s.counts.end(), static_cast<std::int64_t>(value));
    } else {
        if (!(value >= 0.0)) throw InvalidArgument("Poisson initial mean must be >= 0");
        if (value > 0.0) {
            std::poisson_distribution<std::int64_t> draw(value);
            for (auto& c : s.counts) c = draw(rng);
        }
    }
    return s;
}

std::vector<FieldState> simulate_replica(const ModelParams& params, const TorusGrid& grid,
                                         double horizon, std::span<const double> snapshot_times,
                                         std::uint64_t seed, const ReplicaOptions& options)
{
    if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end()))
        throw InvalidArgument("snapshot times must be sorted");
    if (!snapshot_times.empty() && (snapshot_times.front() < 0.0 || snapshot_times.back() > horizon))
        throw InvalidArgument("snapshot times must lie in [0, horizon]");

    Rng rng(seed);
    FieldSimulator sim(params, initial_field(params, grid, rng));
    std::vector<FieldState> out;
    out.reserve(snapshot_times.size());
    std::size_t next_snap = 0;

    auto record_until = [&](double limit) {
        while (next_snap < snapshot_times.size() && snapshot_times[next_snap] < limit) {
            FieldState snap = sim.state();
            snap.time = snapshot_times[next_snap++];
            out.push_back(std::move(snap));
        }
    };

    while (true) {
        const auto t = sim.next_event_time(rng);
        if (!t || *t > horizon) {
            record_until(std::numeric_limits<double>::infinity());
            break;
        }
        record_until(*t);
        sim.fire(*t, rng);
        const std::int64_t total = sim.population();
        if (total > options.explosion_cap)
            throw ReplicaAborted(options.replica_index,
                                 "replica " + std::to_string(options.replica_index) +
                                     ": population " + std::to_string(total) +
                                     " exceeded explosion cap at t = " + std::to_string(*t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ensembles

StatEstimate summarize(std::span<const double> values)
{
    StatEstimate est;
    est.count = values.size();
    if (values.empty()) return est;
    double sum = 0.0;
    for (double v : values) sum += v;
    est.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return est;
    double ss = 0.0;
    for (double v : values) ss += (v - est.mean) * (v - est.mean);
    const double var = ss / static_cast<double>(values.size() - 1);
    est.se = std::sqrt(var / static_cast<double>(values.size()));
    return est;
}

Ensemble::Ensemble(TorusGrid grid, std::vector<double> times, std::size_t replicas)
    : grid_(std::move(grid)), times_(std::move(times)), replicas_(replicas),
      data_(replicas_ * times_.size() * grid_.size(), 0)
{
}

std::size_t Ensemble::snapshot_index(double t) const
{
    for (std::size_t i = 0; i < times_.size(); ++i)
        if (std::abs(times_[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return i;
    throw InvalidArgument("no snapshot at t = " + std::to_string(t));
}

std::span<const std::int32_t> Ensemble::snapshot(std::size_t replica, std::size_t snap) const
{
    const std::size_t n = grid_.size();
    return {data_.data() + (replica * times_.size() + snap) * n, n};
}

std::span<std::int32_t> Ensemble::snapshot(std::size_t replica, std::size_t snap)
{
    const std::size_t n = grid_.size();
    return {data_.data() + (replica * times_.size() + snap) * n, n};
}

EnsembleResult run_ensemble(const ModelParams& params, const TorusGrid& grid, double horizon,
                            std::span<const double> snapshot_times, std::size_t replicas,
                            std::uint64_t master_seed, const EnsembleOptions& options)
{
    if (replicas < 2) throw InvalidArgument("an ensemble needs at least 2 replicas");
    grid.require_fits(params.kernel);

    EnsembleResult result;
    result.ensemble = Ensemble(grid, {snapshot_times.begin(), snapshot_times.end()}, replicas);
    auto& ens = result.ensemble;

    parallel_for(replicas, resolve_thread_count(options.threads), [&](std::size_t r) {
        const std::uint64_t seed = stream_seed(master_seed, options.force_equal_seeds ? 0 : r);
        ReplicaOptions ro{options.explosion_cap, r};
        const auto snaps = simulate_replica(params, grid, horizon, snapshot_times, seed, ro);
        for (std::size_t s = 0; s < snaps.size(); ++s) {
            auto dst = ens.snapshot(r, s);
            for (Site x = 0; x < grid.size(); ++x) {
                if (snaps[s].counts[x] > std::numeric_limits<std::int32_t>::max())
                    throw ReplicaAborted(r, "site count overflows snapshot storage");
                dst[x] = static_cast<std::int32_t>(snaps[s].counts[x]);
            }
        }
    });

    auto& stats = result.stats;
    stats.replicas = replicas;
    stats.times = ens.times();
    const LatticeOffset zero{std::vector<int>(grid.dimension(), 0)};
    for (double t : ens.times()) {
        stats.m1.push_back(estimate_moment(ens, t, {}));
        stats.m2_diag.push_back(estimate_moment(ens, t, std::span(&zero, 1)));
    }
    return result;
}

StatEstimate estimate_moment(const Ensemble& ensemble, double t,
                             std::span<const LatticeOffset> offsets)
{
    const std::size_t snap = ensemble.snapshot_index(t);
    const auto& grid = ensemble.grid();
    for (const auto& u : offsets) {
        if (u.dimension() != grid.dimension())
            throw InvalidArgument("offset dimension does not match the torus");
        for (int i = 0; i < grid.dimension(); ++i)
            if (2 * std::abs(u.coords[i]) > grid.sides()[i])
                throw InvalidArgument("offset outside the torus range");
    }
    // shifted[j][x] = site of x + u_j
    std::vector<std::vector<Site>> shifted(offsets.size(), std::vector<Site>(grid.size()));
    for (std::size_t j = 0; j < offsets.size(); ++j)
        for (Site x = 0; x < grid.size(); ++x) shifted[j][x] = grid.shift(x, offsets[j]);

    std::vector<double> per_replica(ensemble.replicas());
    for (std::size_t r = 0; r < ensemble.replicas(); ++r) {
        const auto n = ensemble.snapshot(r, snap);
        double acc = 0.0;
        for (Site x = 0; x < grid.size(); ++x) {
            double prod = n[x];
            for (std::size_t j = 0; j < offsets.size(); ++j) prod *= n[shifted[j][x]];
            acc += prod;
        }
        per_replica[r] = acc / static_cast<double>(grid.size());
    }
    return summarize(per_replica);
}

StatEstimate estimate_generating_function(const Ensemble& ensemble, double z, double t, Site x)
{
    if (!(z >= 0.0)) throw InvalidArgument("generating function argument z must be >= 0");
    const std::size_t snap = ensemble.snapshot_index(t);
    if (x >= ensemble.grid().size()) throw InvalidArgument("site outside the torus");
    std::vector<double> values(ensemble.replicas());
    for (std::size_t r = 0; r < ensemble.replicas(); ++r)
        values[r] = std::exp(-z * ensemble.snapshot(r, snap)[x]);
    return summarize(values);
}

// ---------------------------------------------------------------------------
// Drift audit

bool DriftAuditReport::ok() const
{
    return std::all_of(checks.begin(), checks.end(), [](const DriftCheck& c) { return c.pass; });
}

DriftAuditReport drift_audit(const ModelParams& params, const FieldState& state, Site x, Site y,
                             double delta, std::size_t restarts, std::uint64_t seed,
                             const DriftAuditOptions& options)
{
    const auto& grid = state.grid;
    if (x == y) throw InvalidArgument("drift audit needs two distinct sites");
    if (!(delta > 0.0)) throw InvalidArgument("drift audit needs delta > 0");
    if (restarts < 2) throw InvalidArgument("drift audit needs at least 2 restarts");
    const std::optional<Site> w = options.third_site;
    if (w && (*w == x || *w == y)) throw InvalidArgument("third site must differ from x and y");

    // Restarts are grouped into a fixed number of blocks, each with its own stream.
    constexpr std::size_t kBlocks = 64;
    const std::size_t blocks = std::min(kBlocks, restarts);
    std::vector<std::int64_t> dx(restarts), dy(restarts), dw(restarts, 0);
    FieldState frozen = state;
    frozen.time = 0.0;

    parallel_for(blocks, resolve_thread_count(options.threads), [&](std::size_t b) {
        Rng rng = make_stream(seed, b);
        const std::size_t begin = b * restarts / blocks;
        const std::size_t end = (b + 1) * restarts / blocks;
        for (std::size_t i = begin; i < end; ++i) {
            FieldSimulator sim(params, frozen);
            while (true) {
                const auto t = sim.next_event_time(rng);
                if (!t || *t > delta) break;
                sim.fire(*t, rng);
            }
            const auto& c = sim.state().counts;
            dx[i] = c[x] - frozen.counts[x];
            dy[i] = c[y] - frozen.counts[y];
            if (w) dw[i] = c[*w] - frozen.counts[*w];
        }
    });

    const XiRelations rel(params, grid);
    const JumpTable walk = JumpTable::from_kernel(params.kernel, grid, 1.0);
    const auto rates = derived_rates(params.law);
    const double particle_rate = params.kappa() + params.law.mu + rates.branch_total;
    auto site_rate = [&](Site s) { return static_cast<double>(state.counts[s]) * particle_rate + params.k; };
    // Rate of events changing n(s): events at s plus jumps into s.
    auto touching_rate = [&](Site s) {
        double r = site_rate(s);
        for (std::size_t e = 0; e < walk.jump_count(); ++e)
            r += params.kappa() * walk.rate(e) * static_cast<double>(state.counts[walk.neighbor(s, e)]);
        return r;
    };
    std::vector<Site> involved{x, y};
    if (w) involved.push_back(*w);
    std::vector<Site> neighborhood = involved;
    for (Site s : involved)
        for (std::size_t e = 0; e < walk.jump_count(); ++e) neighborhood.push_back(walk.neighbor(s, e));
    std::sort(neighborhood.begin(), neighborhood.end());
    neighborhood.erase(std::unique(neighborhood.begin(), neighborhood.end()), neighborhood.end());
    double lambda = 0.0;
    for (Site s : neighborhood) lambda += site_rate(s);

    int max_offspring = 2;
    for (const auto& [n, bn] : params.law.b)
        if (bn > 0.0) max_offspring = std::max(max_offspring, n);
    const double jump_size = 2.0 * std::max(1, max_offspring - 1);
    const double Rx = touching_rate(x);
    const double Ry = touching_rate(y);

    const std::span<const std::int64_t> counts(state.counts);
    DriftAuditReport report;
    auto add_check = [&](std::string name, const std::vector<double>& samples, double target,
                         double second_order) {
        const StatEstimate est = summarize(samples);
        DriftCheck c;
        c.statistic = std::move(name);
        c.empirical = est.mean;
        c.se = est.se;
        c.target = target;
        c.allowance = 3.0 * est.se + delta * lambda * std::abs(target) + delta * delta * second_order;
        c.pass = std::abs(c.empirical - c.target) <= c.allowance;
        report.checks.push_back(std::move(c));
    };
    auto ipow = [](double b, int e) {
        double r = 1.0;
        for (int i = 0; i < e; ++i) r *= b;
        return r;
    };

    std::vector<int> powers{1, 2};
    powers.insert(powers.end(), options.extra_powers.begin(), options.extra_powers.end());
    for (int p : powers) {
        std::vector<double> s(restarts);
        for (std::size_t i = 0; i < restarts; ++i) s[i] = ipow(static_cast<double>(dx[i]), p);
        const double target = delta * rel.power(x, p).evaluate(counts);
        add_check("E[dn(x)^" + std::to_string(p) + "]", s, target,
                  Rx * Rx * ipow(jump_size, p) / 4.0);
    }

    std::vector<std::pair<int, int>> mixed{{1, 1}};
    for (const auto& pq : options.mixed_powers)
        if (pq != std::pair{1, 1}) mixed.push_back(pq);
    for (const auto& [p, q] : mixed) {
        std::vector<double> s(restarts);
        for (std::size_t i = 0; i < restarts; ++i)
            s[i] = ipow(static_cast<double>(dx[i]), p) * ipow(static_cast<double>(dy[i]), q);
        const double target = delta * rel.mixed(x, p, y, q).evaluate(counts);
        add_check("E[dn(x)^" + std::to_string(p) + " dn(y)^" + std::to_string(q) + "]", s, target,
                  Rx * Ry * ipow(jump_size, p + q) / 4.0);
    }

    if (w) {
        std::vector<double> s(restarts);
        for (std::size_t i = 0; i < restarts; ++i)
            s[i] = static_cast<double>(dx[i] * dy[i] * dw[i]);
        const SitePower f[3] = {{x, 1}, {y, 1}, {*w, 1}};
        const double target = delta * rel.moment(f).evaluate(counts);
        const double Rw = touching_rate(*w);
        add_check("E[dn(x) dn(y) dn(w)]", s, target,
                  (Rx * Ry + Rx * Rw + Ry * Rw) * ipow(jump_size, 3) / 4.0);
    }
    return report;
}

} // namespace brw
