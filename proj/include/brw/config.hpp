#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "brw/kernel.hpp"
#include "brw/lyapunov.hpp"
#include "brw/model.hpp"

namespace brw {

/// Thrown for schema violations; the message names the offending key or invariant.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

inline const std::vector<std::string> kTasks = {"simulate",  "moments", "steady-state", "hierarchy",
                                                "fk",        "lyapunov-m1", "lyapunov-m2", "validate"};

struct RunBlock {
    double horizon = 10.0;
    std::vector<double> snapshots;
    std::size_t replicas = 100;
    std::uint64_t master_seed = 1;
    bool force_equal_seeds = false;
    std::int64_t explosion_cap = 50'000'000;
    std::vector<LatticeOffset> offsets; // second-moment offsets reported by simulate/moments
    std::size_t threads = 0;
};

struct Tolerances {
    double mc_sigma = 3.0;   // pass band in standard errors
    double series = 1e-14;   // steady-state series truncation
    double ode = 1e-8;       // RK4 step-halving tolerance
    double bound_slack = 1e-8;
};

struct HierarchyBlock {
    int order = 2;
    std::vector<double> times{1.0};
};

/// Per-site table given as a constant, an explicit array, or a uniform draw [lo, hi].
struct FieldSpec {
    enum class Kind { constant, table, uniform };
    Kind kind = Kind::constant;
    double value = 0.0;
    double low = 0.0;
    double high = 0.0;
    std::vector<double> table;
};

struct FkBlock {
    double t = 1.0;
    std::size_t paths = 10'000;
    std::optional<double> scale; // generator rate; defaults to kappa
    std::vector<Site> sites{0};
    FieldSpec potential;
    FieldSpec source;
    FieldSpec initial;
};

struct SpatialBlock {
    PerturbationEnvelope envelope;
    std::map<int, double> base_b;
    std::size_t trials = 10;
    double horizon = 10.0;
    double output_step = 0.1;
    bool m1_scale_kappa = true;       // "kappa" | "unit"
    bool pair_diffusion_kappa = false; // "unit" | "kappa"
    // Explicit per-site tables replace the random draws when present.
    std::optional<std::vector<double>> v, k, u0, u0_pair;
};

struct ExperimentConfig {
    std::optional<std::string> task;
    ModelParams model;
    TorusGrid grid;
    RunBlock run;
    Tolerances tolerances;
    HierarchyBlock hierarchy;
    FkBlock fk;
    std::optional<SpatialBlock> spatial;
    std::vector<std::string> formats{"csv", "jsonl"};

    /// Canonical JSON of the effective config (CLI overrides applied).
    nlohmann::json effective;
};

/// Parses a config document; unknown keys and non-positive tolerances are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies --seed / --replicas and refreshes `effective`.
void apply_overrides(ExperimentConfig& config, std::optional<std::uint64_t> seed,
                     std::optional<std::size_t> replicas);

/// FNV-1a 64 over the canonical dump of `effective`, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Materializes a field spec on the torus; uniform draws use stream (seed, stream).
std::vector<double> materialize(const FieldSpec& spec, std::size_t sites, std::uint64_t seed,
                                std::uint64_t stream);

} // namespace brw
