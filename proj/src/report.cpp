#include "blowlab/report.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "blowlab/version.hpp"

namespace blowlab {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

[[noreturn]] void fail_at(const std::string& path, std::size_t line, const std::string& what) {
    fail(path, "line " + std::to_string(line) + ": " + what);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(path, "cannot open for writing");
    out << text;
    out.flush();
    if (!out) fail(path, "write failed");
}

std::string join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    return line;
}

} // namespace

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex_stamp(std::uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

std::string artifact_header(const std::string& stamp) {
    return std::string("# ") + kToolName + " " + kVersion + " config=" + stamp;
}

void write_csv(const std::string& path, const std::string& stamp, const Table& table) {
    TextTable text;
    text.columns = table.columns;
    text.rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        std::vector<std::string> cells;
        cells.reserve(row.size());
        for (double v : row) cells.push_back(format_double(v));
        text.rows.push_back(std::move(cells));
    }
    write_csv(path, stamp, text);
}

void write_csv(const std::string& path, const std::string& stamp, const TextTable& table) {
    std::string out = artifact_header(stamp) + "\n" + join(table.columns) + "\n";
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            fail(path, "row width " + std::to_string(row.size()) + " does not match " +
                           std::to_string(table.columns.size()) + " columns");
        out += join(row) + "\n";
    }
    write_text(path, out);
}

Table read_csv(const std::string& path, std::string* stamp) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    Table table;
    std::string line;
    std::size_t lineno = 0;
    bool saw_columns = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (lineno == 1 && stamp) {
                const auto pos = line.rfind("config=");
                *stamp = pos == std::string::npos ? "" : line.substr(pos + 7);
            }
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!saw_columns) {
            table.columns = std::move(cells);
            saw_columns = true;
            continue;
        }
        if (cells.size() != table.columns.size())
            fail_at(path, lineno, "expected " + std::to_string(table.columns.size()) + " cells");
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const char* first = cells[i].data();
            const char* last = first + cells[i].size();
            const auto res = std::from_chars(first, last, row[i]);
            if (res.ec != std::errc{} || res.ptr != last)
                fail_at(path, lineno, "'" + cells[i] + "' is not a number");
        }
        table.rows.push_back(std::move(row));
    }
    if (!saw_columns) fail(path, "no column header");
    return table;
}

nlohmann::ordered_json stamped_json(const std::string& stamp) {
    nlohmann::ordered_json doc;
    doc["header"] = {{"tool", kToolName}, {"version", kVersion}, {"config", stamp}};
    return doc;
}

void write_json(const std::string& path, const nlohmann::ordered_json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

nlohmann::ordered_json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(path, e.what());
    }
}

} // namespace blowlab
