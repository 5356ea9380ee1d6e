#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brw/kernel.hpp"
#include "brw/model.hpp"
#include "brw/parallel.hpp"

namespace brw {

/// Particle counts n(t, x) on a torus.
struct FieldState {
    TorusGrid grid;
    std::vector<std::int64_t> counts;
    double time = 0.0;

    std::int64_t total() const;
};

enum class EventKind { jump, death, branch, immigration };

/// One transformation of the field. Branch(n) adds n-1 particles at `site`;
/// Jump moves one particle from `site` to `target`.
struct Event {
    EventKind kind = EventKind::immigration;
    Site site = 0;
    Site target = 0;
    int offspring = 0;
    double time = 0.0;
};

/// Thrown when a replica's population exceeds the explosion cap.
class ReplicaAborted : public NumericalFailure {
public:
    ReplicaAborted(std::size_t replica, const std::string& what)
        : NumericalFailure(what), replica_(replica)
    {
    }
    std::size_t replica() const { return replica_; }

private:
    std::size_t replica_;
};

/// Exact-event (Gillespie) dynamics of one field. Site totals live in a Fenwick
/// tree so the particle-carrying site is drawn in O(log |sites|).
class FieldSimulator {
public:
    FieldSimulator(const ModelParams& params, FieldState initial);

    const FieldState& state() const { return state_; }
    /// n(x) (kappa + mu + sum b_n) + k.
    double site_rate(Site x) const;
    double total_rate() const;
    std::int64_t population() const { return total_; }

    /// Advances to the next event; std::nullopt when the total rate is zero.
    /// A site is chosen with probability proportional to its rate and the kind within
    /// the site proportionally to {kappa a(z) n(x), mu n(x), b_n n(x), k}; this is
    /// sampled as "particle event vs immigration" first, which has the same law.
    std::optional<Event> step(Rng& rng);

    /// Draws the waiting time and returns the next event epoch without changing the field;
    /// std::nullopt when the total rate is zero. Discarding a drawn epoch is valid by
    /// memorylessness, which is how horizons and snapshots are handled.
    std::optional<double> next_event_time(Rng& rng);
    /// Selects and applies an event at `time`.
    Event fire(double time, Rng& rng);

private:
    void add(Site x, std::int64_t delta);
    Site find_particle_site(std::int64_t rank) const;

    ModelParams params_;
    FieldState state_;
    JumpTable jumps_;
    std::vector<std::pair<int, double>> branch_;
    double particle_rate_ = 0.0;
    std::vector<std::int64_t> tree_;
    std::int64_t total_ = 0;
};

/// Convenience single-step entry point; builds a simulator for the state each call.
std::optional<Event> step_event(FieldState& state, const ModelParams& params, Rng& rng);

/// Draws the initial field from params.init (constant values must be nonnegative integers).
FieldState initial_field(const ModelParams& params, const TorusGrid& grid, Rng& rng);

struct ReplicaOptions {
    std::int64_t explosion_cap = 50'000'000;
    std::size_t replica_index = 0;
};

/// Simulates to `horizon` and records the field at each snapshot time (sorted, <= horizon).
std::vector<FieldState> simulate_replica(const ModelParams& params, const TorusGrid& grid,
                                         double horizon, std::span<const double> snapshot_times,
                                         std::uint64_t seed, const ReplicaOptions& options = {});

struct StatEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t count = 0;
};

/// Mean and standard error (sample std / sqrt(M)) of per-replica values.
StatEstimate summarize(std::span<const double> values);

/// Raw snapshots of an ensemble: [replica][snapshot][site].
class Ensemble {
public:
    Ensemble() = default;
    Ensemble(TorusGrid grid, std::vector<double> times, std::size_t replicas);

    const TorusGrid& grid() const { return grid_; }
    const std::vector<double>& times() const { return times_; }
    std::size_t replicas() const { return replicas_; }
    std::size_t snapshot_index(double t) const;

    std::span<const std::int32_t> snapshot(std::size_t replica, std::size_t snap) const;
    std::span<std::int32_t> snapshot(std::size_t replica, std::size_t snap);

private:
    TorusGrid grid_;
    std::vector<double> times_;
    std::size_t replicas_ = 0;
    std::vector<std::int32_t> data_;
};

struct EnsembleStats {
    std::size_t replicas = 0;
    std::vector<double> times;
    std::vector<StatEstimate> m1;      // per snapshot
    std::vector<StatEstimate> m2_diag; // E n(t,x)^2 per snapshot
};

struct EnsembleOptions {
    std::size_t threads = 0;
    bool force_equal_seeds = false;
    std::int64_t explosion_cap = 50'000'000;
};

struct EnsembleResult {
    Ensemble ensemble;
    EnsembleStats stats;
};

/// M independent replicas; replica i uses stream (master_seed, i), or (master_seed, 0)
/// for all when seeds are forced equal. Results are merged in replica order.
EnsembleResult run_ensemble(const ModelParams& params, const TorusGrid& grid, double horizon,
                            std::span<const double> snapshot_times, std::size_t replicas,
                            std::uint64_t master_seed, const EnsembleOptions& options = {});

/// Spatial + ensemble average of prod_i n(t, x + u_i) with x ranging over the torus;
/// order = 1 + offsets.size() (offset of the first factor is 0).
StatEstimate estimate_moment(const Ensemble& ensemble, double t,
                             std::span<const LatticeOffset> offsets);

/// Ensemble average of exp(-z n(t, x)); z must be >= 0.
StatEstimate estimate_generating_function(const Ensemble& ensemble, double z, double t, Site x);

struct DriftCheck {
    std::string statistic;
    double empirical = 0.0;
    double se = 0.0;
    double target = 0.0;
    double allowance = 0.0;
    bool pass = false;
};

struct DriftAuditReport {
    std::vector<DriftCheck> checks;
    bool ok() const;
};

struct DriftAuditOptions {
    /// (p, q) powers for E[dn(x)^p dn(y)^q]; (1,1) is always checked.
    std::vector<std::pair<int, int>> mixed_powers;
    /// Single-site powers for E[dn(x)^p]; p = 1, 2 are always checked.
    std::vector<int> extra_powers;
    /// Optional third site for the vanishing triple product.
    std::optional<Site> third_site;
    std::size_t threads = 0;
};

/// Restarts the frozen state M times for a time delta and compares empirical increment
/// moments with the conditional-increment relations evaluated at the state (times delta).
/// Allowance = 3 SE + delta * Lambda * |target| + delta^2 * R_x * R_y * 2^(p+q-2), where
/// Lambda sums the event rates of the involved sites and their kernel neighbours and R_s
/// is the rate of events that change n(s).
DriftAuditReport drift_audit(const ModelParams& params, const FieldState& state, Site x, Site y,
                             double delta, std::size_t restarts, std::uint64_t seed,
                             const DriftAuditOptions& options = {});

} // namespace brw
