#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "brw/config.hpp"
#include "brw/report.hpp"

namespace brw {

struct TaskResult {
    std::vector<Table> tables;
    std::vector<std::string> messages; // human-readable summary lines
};

/// Runs one task on a parsed config.
TaskResult run_task(const std::string& task, const ExperimentConfig& config);

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2 };

struct RunRequest {
    std::string task;
    std::filesystem::path config;
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas;
};

/// Loads the config, runs the task, writes tables plus manifest.json into `out`.
/// Exit codes: 0 success, 1 config/validation error, 2 numerical failure.
int run(const RunRequest& request, std::ostream& log);

} // namespace brw
