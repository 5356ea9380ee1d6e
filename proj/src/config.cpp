#include "brw/config.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>

#include "brw/parallel.hpp"

namespace brw {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items())
        if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const json& obj, const char* key, const std::string& where, T fallback)
{
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

template <class T>
T require(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key)) throw ConfigError("missing key " + where + "." + key);
    return get<T>(obj, key, where, T{});
}

double positive(double x, const std::string& name)
{
    if (!(x > 0.0)) throw ConfigError(name + " must be > 0");
    return x;
}

double nonnegative(double x, const std::string& name)
{
    if (!(x >= 0.0)) throw ConfigError(name + " must be >= 0");
    return x;
}

std::map<int, double> parse_b(const json& obj, const std::string& where)
{
    if (!obj.is_object()) throw ConfigError(where + " must map offspring counts to rates");
    std::map<int, double> b;
    for (const auto& [key, value] : obj.items()) {
        int n = 0;
        try {
            std::size_t used = 0;
            n = std::stoi(key, &used);
            if (used != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
            throw ConfigError(where + " key '" + key + "' is not an offspring count");
        }
        if (!value.is_number()) throw ConfigError(where + "." + key + " must be a number");
        b[n] = value.get<double>();
    }
    return b;
}

LatticeOffset parse_offset(const json& v, int dimension, const std::string& where)
{
    LatticeOffset u;
    if (v.is_number_integer()) {
        u.coords = {v.get<int>()};
    } else if (v.is_array()) {
        for (const auto& c : v) {
            if (!c.is_number_integer()) throw ConfigError(where + " offsets must be integers");
            u.coords.push_back(c.get<int>());
        }
    } else {
        throw ConfigError(where + " offset must be an integer or an integer array");
    }
    if (u.dimension() != dimension) throw ConfigError(where + " offset dimension differs from the grid");
    return u;
}

KernelSpec parse_kernel(const json& model, int dimension)
{
    const double kappa = require<double>(model, "kappa", "model");
    const json& k = model.contains("kernel") ? model.at("kernel") : json("srw");
    KernelSpec spec;
    if (k.is_string()) {
        if (k.get<std::string>() != "srw") throw ConfigError("model.kernel must be \"srw\" or an entry list");
        spec = simple_random_walk(dimension, kappa);
    } else {
        check_keys(k, {"entries"}, "model.kernel");
        spec.dimension = dimension;
        spec.kappa = kappa;
        const json& entries = k.at("entries");
        if (!entries.is_array()) throw ConfigError("model.kernel.entries must be an array");
        for (const auto& e : entries) {
            check_keys(e, {"offset", "weight"}, "model.kernel.entries[]");
            spec.entries.push_back({parse_offset(e.at("offset"), dimension, "model.kernel"),
                                    require<double>(e, "weight", "model.kernel.entries[]")});
        }
    }
    const ValidationReport r = validate_kernel(spec);
    if (!r.ok()) throw ConfigError("kernel " + r.summary());
    return spec;
}

FieldSpec parse_field(const json& v, const std::string& where)
{
    FieldSpec f;
    if (v.is_number()) {
        f.kind = FieldSpec::Kind::constant;
        f.value = v.get<double>();
    } else if (v.is_array()) {
        f.kind = FieldSpec::Kind::table;
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError(where + " table entries must be numbers");
            f.table.push_back(x.get<double>());
        }
    } else if (v.is_object()) {
        check_keys(v, {"uniform"}, where);
        const auto& r = v.at("uniform");
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
            throw ConfigError(where + ".uniform must be [low, high]");
        f.kind = FieldSpec::Kind::uniform;
        f.low = r[0].get<double>();
        f.high = r[1].get<double>();
        if (!(f.low <= f.high)) throw ConfigError(where + ".uniform needs low <= high");
    } else {
        throw ConfigError(where + " must be a number, an array or {\"uniform\": [lo, hi]}");
    }
    return f;
}

std::vector<double> number_list(const json& v, const std::string& where)
{
    if (!v.is_array()) throw ConfigError(where + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(where + " must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

} // namespace

ExperimentConfig parse_config(const json& doc)
{
    check_keys(doc, {"task", "model", "grid", "run", "tolerances", "hierarchy", "fk", "spatial", "output"},
               "config");
    ExperimentConfig c;
    c.effective = doc;
    if (doc.contains("task")) {
        const auto task = get<std::string>(doc, "task", "config", "");
        if (std::find(kTasks.begin(), kTasks.end(), task) == kTasks.end())
            throw ConfigError("unknown task '" + task + "'");
        c.task = task;
    }

    // grid
    if (!doc.contains("grid")) throw ConfigError("missing block 'grid'");
    const json& g = doc.at("grid");
    check_keys(g, {"dimension", "sides"}, "grid");
    const int dimension = get<int>(g, "dimension", "grid", 1);
    if (dimension < 1) throw ConfigError("grid.dimension must be >= 1");
    auto sides = require<std::vector<int>>(g, "sides", "grid");
    if (static_cast<int>(sides.size()) != dimension) throw ConfigError("grid.sides needs one entry per dimension");
    for (int L : sides)
        if (L < 1) throw ConfigError("grid.sides must be positive");
    c.grid = TorusGrid(sides);

    // model
    if (!doc.contains("model")) throw ConfigError("missing block 'model'");
    const json& m = doc.at("model");
    check_keys(m, {"kernel", "kappa", "mu", "b", "k", "init"}, "model");
    c.model.kernel = parse_kernel(m, dimension);
    c.model.law.mu = nonnegative(require<double>(m, "mu", "model"), "model.mu");
    if (m.contains("b")) c.model.law.b = parse_b(m.at("b"), "model.b");
    const ValidationReport law = validate_law(c.model.law);
    if (!law.ok()) throw ConfigError("law " + law.summary());
    c.model.k = nonnegative(get<double>(m, "k", "model", 0.0), "model.k");
    if (m.contains("init")) {
        const json& init = m.at("init");
        check_keys(init, {"type", "value"}, "model.init");
        const auto type = get<std::string>(init, "type", "model.init", "constant");
        if (type == "constant")
            c.model.init.kind = InitialCondition::Kind::constant;
        else if (type == "poisson")
            c.model.init.kind = InitialCondition::Kind::poisson;
        else
            throw ConfigError("model.init.type must be \"constant\" or \"poisson\"");
        c.model.init.value = nonnegative(require<double>(init, "value", "model.init"), "model.init.value");
    }
    try {
        c.grid.require_fits(c.model.kernel);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }

    // run
    if (doc.contains("run")) {
        const json& r = doc.at("run");
        check_keys(r, {"horizon", "snapshots", "replicas", "master_seed", "force_equal_seeds", "explosion_cap",
                       "offsets", "threads"},
                   "run");
        c.run.horizon = nonnegative(get<double>(r, "horizon", "run", c.run.horizon), "run.horizon");
        if (r.contains("snapshots")) c.run.snapshots = number_list(r.at("snapshots"), "run.snapshots");
        c.run.replicas = get<std::size_t>(r, "replicas", "run", c.run.replicas);
        c.run.master_seed = get<std::uint64_t>(r, "master_seed", "run", c.run.master_seed);
        c.run.force_equal_seeds = get<bool>(r, "force_equal_seeds", "run", false);
        c.run.explosion_cap = get<std::int64_t>(r, "explosion_cap", "run", c.run.explosion_cap);
        c.run.threads = get<std::size_t>(r, "threads", "run", 0);
        if (r.contains("offsets")) {
            if (!r.at("offsets").is_array()) throw ConfigError("run.offsets must be an array");
            for (const auto& u : r.at("offsets")) c.run.offsets.push_back(parse_offset(u, dimension, "run"));
        }
    }
    if (c.run.snapshots.empty()) c.run.snapshots = {c.run.horizon};
    std::sort(c.run.snapshots.begin(), c.run.snapshots.end());
    if (c.run.snapshots.front() < 0.0 || c.run.snapshots.back() > c.run.horizon)
        throw ConfigError("run.snapshots must lie in [0, run.horizon]");
    if (c.run.offsets.empty()) c.run.offsets.push_back(LatticeOffset{std::vector<int>(dimension, 0)});
    if (c.run.replicas < 2) throw ConfigError("run.replicas must be >= 2");
    if (c.run.explosion_cap < 1) throw ConfigError("run.explosion_cap must be positive");

    // tolerances
    if (doc.contains("tolerances")) {
        const json& t = doc.at("tolerances");
        check_keys(t, {"mc_sigma", "series", "ode", "bound_slack"}, "tolerances");
        c.tolerances.mc_sigma = positive(get<double>(t, "mc_sigma", "tolerances", 3.0), "tolerances.mc_sigma");
        c.tolerances.series = positive(get<double>(t, "series", "tolerances", 1e-14), "tolerances.series");
        c.tolerances.ode = positive(get<double>(t, "ode", "tolerances", 1e-8), "tolerances.ode");
        c.tolerances.bound_slack =
            positive(get<double>(t, "bound_slack", "tolerances", 1e-8), "tolerances.bound_slack");
    }

    // hierarchy
    if (doc.contains("hierarchy")) {
        const json& h = doc.at("hierarchy");
        check_keys(h, {"order", "times"}, "hierarchy");
        c.hierarchy.order = get<int>(h, "order", "hierarchy", 2);
        if (c.hierarchy.order < 1 || c.hierarchy.order > 3) throw ConfigError("hierarchy.order must be 1, 2 or 3");
        if (h.contains("times")) c.hierarchy.times = number_list(h.at("times"), "hierarchy.times");
        std::sort(c.hierarchy.times.begin(), c.hierarchy.times.end());
        if (c.hierarchy.times.empty() || c.hierarchy.times.front() < 0.0)
            throw ConfigError("hierarchy.times must be nonempty and >= 0");
    }

    // fk
    c.fk.potential = FieldSpec{FieldSpec::Kind::constant, 0.0, 0.0, 0.0, {}};
    c.fk.initial = FieldSpec{FieldSpec::Kind::constant, 1.0, 0.0, 0.0, {}};
    if (doc.contains("fk")) {
        const json& f = doc.at("fk");
        check_keys(f, {"t", "paths", "scale", "sites", "potential", "source", "initial"}, "fk");
        c.fk.t = nonnegative(get<double>(f, "t", "fk", 1.0), "fk.t");
        c.fk.paths = get<std::size_t>(f, "paths", "fk", c.fk.paths);
        if (c.fk.paths < 100) throw ConfigError("fk.paths must be >= 100");
        if (f.contains("scale")) c.fk.scale = nonnegative(get<double>(f, "scale", "fk", 0.0), "fk.scale");
        if (f.contains("sites")) c.fk.sites = get<std::vector<Site>>(f, "sites", "fk", {});
        if (f.contains("potential")) c.fk.potential = parse_field(f.at("potential"), "fk.potential");
        if (f.contains("source")) c.fk.source = parse_field(f.at("source"), "fk.source");
        if (f.contains("initial")) c.fk.initial = parse_field(f.at("initial"), "fk.initial");
        for (Site x : c.fk.sites)
            if (x >= c.grid.size()) throw ConfigError("fk.sites entry outside the torus");
    }

    // spatial
    if (doc.contains("spatial")) {
        const json& s = doc.at("spatial");
        check_keys(s, {"envelope", "base_b", "trials", "horizon", "output_step", "m1_scale", "m2_diffusion",
                       "tables"},
                   "spatial");
        SpatialBlock sp;
        if (!s.contains("envelope")) throw ConfigError("missing key spatial.envelope");
        const json& e = s.at("envelope");
        check_keys(e, {"v0", "k0", "u0", "u0_pair", "epsilon"}, "spatial.envelope");
        sp.envelope.v0 = require<double>(e, "v0", "spatial.envelope");
        sp.envelope.k0 = require<double>(e, "k0", "spatial.envelope");
        sp.envelope.u0 = require<double>(e, "u0", "spatial.envelope");
        sp.envelope.u0_pair = get<double>(e, "u0_pair", "spatial.envelope", sp.envelope.u0 * sp.envelope.u0);
        sp.envelope.epsilon = require<double>(e, "epsilon", "spatial.envelope");
        try {
            sp.envelope.validate();
        } catch (const InvalidArgument& ex) {
            throw ConfigError(ex.what());
        }
        if (s.contains("base_b")) sp.base_b = parse_b(s.at("base_b"), "spatial.base_b");
        sp.trials = get<std::size_t>(s, "trials", "spatial", sp.trials);
        sp.horizon = nonnegative(get<double>(s, "horizon", "spatial", sp.horizon), "spatial.horizon");
        sp.output_step = positive(get<double>(s, "output_step", "spatial", sp.output_step), "spatial.output_step");
        const auto m1s = get<std::string>(s, "m1_scale", "spatial", "kappa");
        const auto m2d = get<std::string>(s, "m2_diffusion", "spatial", "unit");
        if ((m1s != "kappa" && m1s != "unit") || (m2d != "kappa" && m2d != "unit"))
            throw ConfigError("spatial.m1_scale and spatial.m2_diffusion must be \"kappa\" or \"unit\"");
        sp.m1_scale_kappa = m1s == "kappa";
        sp.pair_diffusion_kappa = m2d == "kappa";
        if (s.contains("tables")) {
            const json& t = s.at("tables");
            check_keys(t, {"v", "k", "u0", "u0_pair"}, "spatial.tables");
            const std::size_t S = c.grid.size();
            auto table = [&](const char* key, std::size_t n) -> std::optional<std::vector<double>> {
                if (!t.contains(key)) return std::nullopt;
                auto v = number_list(t.at(key), std::string("spatial.tables.") + key);
                if (v.size() != n) throw ConfigError(std::string("spatial.tables.") + key + " has the wrong length");
                return v;
            };
            sp.v = table("v", S);
            sp.k = table("k", S);
            sp.u0 = table("u0", S);
            sp.u0_pair = table("u0_pair", S * S);
            if (!sp.v || !sp.k || !sp.u0) throw ConfigError("spatial.tables needs v, k and u0");
        }
        c.spatial = std::move(sp);
    }

    // output
    if (doc.contains("output")) {
        const json& o = doc.at("output");
        check_keys(o, {"formats"}, "output");
        c.formats = get<std::vector<std::string>>(o, "formats", "output", c.formats);
        for (const auto& f : c.formats)
            if (f != "csv" && f != "jsonl") throw ConfigError("output.formats entries must be \"csv\" or \"jsonl\"");
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

void apply_overrides(ExperimentConfig& config, std::optional<std::uint64_t> seed,
                     std::optional<std::size_t> replicas)
{
    if (seed) {
        config.run.master_seed = *seed;
        config.effective["run"]["master_seed"] = *seed;
    }
    if (replicas) {
        if (*replicas < 2) throw ConfigError("replicas must be >= 2");
        config.run.replicas = *replicas;
        config.effective["run"]["replicas"] = *replicas;
    }
}

std::string config_hash(const ExperimentConfig& config)
{
    const std::string text = config.effective.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::vector<double> materialize(const FieldSpec& spec, std::size_t sites, std::uint64_t seed,
                                std::uint64_t stream)
{
    switch (spec.kind) {
    case FieldSpec::Kind::constant: return std::vector<double>(sites, spec.value);
    case FieldSpec::Kind::table:
        if (spec.table.size() != sites) throw ConfigError("field table length differs from the torus size");
        return spec.table;
    case FieldSpec::Kind::uniform: {
        Rng rng = make_stream(seed, stream);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<double> out(sites);
        for (double& x : out) x = spec.low + (spec.high - spec.low) * unit(rng);
        return out;
    }
    }
    return {};
}

} // namespace brw
