#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace brw {

using Cell = std::variant<double, std::int64_t, std::string, bool>;

/// A result table destined for <name>.csv and <name>.jsonl.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
};

/// %.17g for doubles ("nan", "inf", "-inf" for non-finite values).
std::string format_number(double x);
std::string format_cell(const Cell& c);

/// Provenance stamped on every emitted file.
struct RunStamp {
    std::uint64_t master_seed = 0;
    std::string config_hash;
};

/// Writes the CSV (header, rows, trailing "# master_seed=... config_hash=..." line) and/or
/// the json-lines mirror (one object per row carrying the same values plus the stamp).
/// Returns the paths written. I/O failures throw std::runtime_error naming the path.
std::vector<std::filesystem::path> emit_report(const Table& table, const std::filesystem::path& dir,
                                               const std::vector<std::string>& formats,
                                               const RunStamp& stamp);

} // namespace brw
