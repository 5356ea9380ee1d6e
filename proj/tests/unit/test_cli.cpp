#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "brw/config.hpp"
#include "brw/experiment.hpp"
#include "brw/report.hpp"

using namespace brw;
namespace fs = std::filesystem;

namespace {

nlohmann::json base_config()
{
    std::ifstream in(fs::path(BRW_CONFIG_DIR) / "binary.json");
    return nlohmann::json::parse(in);
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("brw_unit_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const nlohmann::json& doc, const fs::path& dir)
{
    const auto path = dir / "config.json";
    std::ofstream(path) << doc.dump(2);
    return path;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const fs::path& path)
{
    std::ifstream in(path);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
    return out;
}

int run_task_in(const std::string& task, const nlohmann::json& doc, const fs::path& dir, std::string* log = nullptr,
                std::optional<std::size_t> replicas = std::nullopt)
{
    std::ostringstream os;
    const int code = run({task, write_config(doc, dir), dir / "out", std::nullopt, replicas}, os);
    if (log) *log = os.str();
    return code;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("schema rejects unknown keys and non-positive tolerances")
{
    auto doc = base_config();
    CHECK_NOTHROW(parse_config(doc));
    doc["model"]["colour"] = 3;
    CHECK_THROWS_AS(parse_config(doc), ConfigError);

    doc = base_config();
    doc["tolerances"] = {{"ode", -1.0}};
    CHECK_THROWS_AS(parse_config(doc), ConfigError);

    doc = base_config();
    doc["model"]["kernel"] = nlohmann::json::parse(
        R"({"entries": [{"offset": [1], "weight": 0.6}, {"offset": [-1], "weight": 0.4}]})");
    CHECK_THROWS_AS(parse_config(doc), InvalidArgument);
}

TEST_CASE("overrides change the hash")
{
    auto cfg = parse_config(base_config());
    const auto h = config_hash(cfg);
    CHECK(h.size() == 16);
    apply_overrides(cfg, 5, std::nullopt);
    CHECK(cfg.run.master_seed == 5);
    CHECK(config_hash(cfg) != h);
}

TEST_CASE("validate task")
{
    const auto dir = scratch("validate");
    std::string log;
    CHECK(run_task_in("validate", base_config(), dir, &log) == kExitOk);
    CHECK(log.find("kernel pass, law pass, subcritical") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "manifest.json"));

    auto bad = base_config();
    bad["model"]["mu"] = -1.0;
    CHECK(run_task_in("validate", bad, dir, &log) == kExitConfig);
    CHECK(log.find("mu") != std::string::npos);
}

TEST_CASE("steady-state table layout")
{
    const auto dir = scratch("steady");
    REQUIRE(run_task_in("steady-state", base_config(), dir) == kExitOk);
    const auto rows = lines(dir / "out" / "m2_steady.csv");
    CHECK(rows.front() == "u,m2_series,m2_fourier,abs_diff");
    CHECK(rows.back().rfind("# master_seed=20261017 config_hash=", 0) == 0);
}

TEST_CASE("simulate with equal forced seeds has zero spread")
{
    const auto dir = scratch("simulate");
    auto doc = base_config();
    doc["run"]["force_equal_seeds"] = true;
    REQUIRE(run_task_in("simulate", doc, dir, nullptr, 2) == kExitOk);
    const auto rows = lines(dir / "out" / "ensemble.csv");
    CHECK(rows.front() == "t,stat,offset,mean,se");
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) CHECK(split(rows[i]).back() == "0");
}

TEST_CASE("report emission")
{
    const auto dir = scratch("report");
    Table empty{"moments", {"t", "stat", "offset", "mc_mean", "mc_se", "analytic", "abs_diff"}, {}};
    emit_report(empty, dir, {"csv", "jsonl"}, {7, "00ff"});
    CHECK(slurp(dir / "moments.csv") == "t,stat,offset,mc_mean,mc_se,analytic,abs_diff\n# master_seed=7 config_hash=00ff\n");
    CHECK(slurp(dir / "moments.jsonl").empty());

    Table t{"values", {"a", "b", "c"}, {}};
    t.add({0.1, std::int64_t{3}, std::string("x")});
    t.add({1.0 / 3.0, std::int64_t{-2}, std::string("y")});
    emit_report(t, dir, {"csv", "jsonl"}, {7, "00ff"});
    const auto csv = lines(dir / "values.csv");
    const auto jsonl = lines(dir / "values.jsonl");
    REQUIRE(jsonl.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto fields = split(csv[i + 1]);
        const auto obj = nlohmann::json::parse(jsonl[i]);
        CHECK(std::stod(fields[0]) == obj["a"].get<double>());
        CHECK(std::stoll(fields[1]) == obj["b"].get<long long>());
        CHECK(fields[2] == obj["c"].get<std::string>());
        CHECK(obj["master_seed"] == 7);
        CHECK(obj["config_hash"] == "00ff");
    }
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK_THROWS_AS(t.add({1.0}), InvalidArgument);
}

TEST_CASE("moments and lyapunov headers")
{
    auto doc = base_config();
    doc["grid"]["sides"] = {8};
    doc["run"]["offsets"] = {{0}};
    doc["spatial"]["trials"] = 2;
    doc["spatial"]["horizon"] = 1.0;
    doc["spatial"]["output_step"] = 0.5;

    const auto dir = scratch("moments");
    REQUIRE(run_task_in("moments", doc, dir, nullptr, 50) == kExitOk);
    CHECK(lines(dir / "out" / "moments.csv").front() == "t,stat,offset,mc_mean,mc_se,analytic,abs_diff");

    const auto ldir = scratch("lyapunov");
    REQUIRE(run_task_in("lyapunov-m2", doc, ldir) == kExitOk);
    const auto rows = lines(ldir / "out" / "lyapunov.csv");
    CHECK(rows.front() == "draw,t,site,value,lower,upper,margin,pass");
    CHECK(rows.size() == 1 + 2 * 3 + 1);
}

TEST_CASE("rerunning the echoed config reproduces every output")
{
    auto doc = base_config();
    doc["grid"]["sides"] = {8};
    const auto first = scratch("roundtrip_a");
    REQUIRE(run_task_in("moments", doc, first, nullptr, 40) == kExitOk);
    const auto manifest = nlohmann::json::parse(slurp(first / "out" / "manifest.json"));

    const auto second = scratch("roundtrip_b");
    REQUIRE(run_task_in("moments", manifest["config"], second) == kExitOk);
    for (const auto& name : manifest["files"]) {
        const auto file = name.get<std::string>();
        CHECK(slurp(first / "out" / file) == slurp(second / "out" / file));
        CHECK(slurp(first / "out" / file).find(manifest["config_hash"].get<std::string>()) != std::string::npos);
    }
    const auto again = nlohmann::json::parse(slurp(second / "out" / "manifest.json"));
    CHECK(again["config_hash"] == manifest["config_hash"]);
}

TEST_CASE("numerical failures exit with code 2")
{
    auto doc = base_config();
    doc["model"]["mu"] = 0.1;
    doc["model"]["b"] = {{"2", 3.0}};
    doc["grid"]["sides"] = {4};
    doc["fk"]["sites"] = {0};
    doc["run"]["explosion_cap"] = 500;
    doc["run"]["horizon"] = 30.0;
    doc["run"]["snapshots"] = {30.0};
    const auto dir = scratch("explode");
    std::string log;
    CHECK(run_task_in("simulate", doc, dir, &log, 4) == kExitNumerical);
    CHECK(log.find("numerical failure") != std::string::npos);
}

}
