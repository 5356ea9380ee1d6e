#include "brw/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "brw/kernel.hpp"

namespace brw {

void Table::add(std::vector<Cell> row)
{
    if (row.size() != columns.size()) throw InvalidArgument("row width differs from table '" + name + "'");
    rows.push_back(std::move(row));
}

std::string format_number(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_cell(const Cell& c)
{
    struct Visitor {
        std::string operator()(double x) const { return format_number(x); }
        std::string operator()(std::int64_t x) const { return std::to_string(x); }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    };
    return std::visit(Visitor{}, c);
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

nlohmann::ordered_json to_json(const Cell& c)
{
    struct Visitor {
        nlohmann::ordered_json operator()(double x) const
        {
            // JSON has no non-finite numbers; keep the CSV spelling.
            if (!std::isfinite(x)) return format_number(x);
            return x;
        }
        nlohmann::ordered_json operator()(std::int64_t x) const { return x; }
        nlohmann::ordered_json operator()(const std::string& s) const { return s; }
        nlohmann::ordered_json operator()(bool b) const { return b; }
    };
    return std::visit(Visitor{}, c);
}

} // namespace

std::vector<std::filesystem::path> emit_report(const Table& table, const std::filesystem::path& dir,
                                               const std::vector<std::string>& formats,
                                               const RunStamp& stamp)
{
    std::vector<std::filesystem::path> written;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    const bool csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
    const bool jsonl = std::find(formats.begin(), formats.end(), "jsonl") != formats.end();

    if (csv) {
        const auto path = dir / (table.name + ".csv");
        auto out = open_for_write(path);
        for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
        out << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
            out << '\n';
        }
        out << "# master_seed=" << stamp.master_seed << " config_hash=" << stamp.config_hash << '\n';
        finish(out, path);
        written.push_back(path);
    }
    if (jsonl) {
        const auto path = dir / (table.name + ".jsonl");
        auto out = open_for_write(path);
        for (const auto& row : table.rows) {
            nlohmann::ordered_json obj;
            for (std::size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = to_json(row[i]);
            obj["master_seed"] = stamp.master_seed;
            obj["config_hash"] = stamp.config_hash;
            // Doubles are printed with round-trip precision, matching the CSV values.
            out << obj.dump() << '\n';
        }
        finish(out, path);
        written.push_back(path);
    }
    return written;
}

} // namespace brw
