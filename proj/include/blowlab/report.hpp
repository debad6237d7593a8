#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace blowlab {

/// FNV-1a 64-bit hash; the workbench's artifact stamp primitive.
std::uint64_t fnv1a(std::string_view bytes);

/// 16-hex-digit rendering of a hash, the form every artifact stamp uses.
std::string hex_stamp(std::uint64_t hash);

/// Shortest decimal form that parses back to exactly the same double,
/// locale-independent.  Every number in an artifact goes through this so that
/// identical runs produce byte-identical files and a reread artifact carries
/// the exact binary values of the run that wrote it.
std::string format_double(double v);

/// The line every artifact opens with: `# <tool> <version> config=<stamp>`.
/// JSON artifacts carry the same triple as their leading "header" member.
std::string artifact_header(const std::string& stamp);

/// Numeric table artifact (grids, traces).
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Table artifact with free-form cells (classification labels and the like).
struct TextTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

/// Write a stamped CSV artifact.  Throws std::runtime_error (naming the path)
/// on IO failure or on a row whose width disagrees with the column count.
void write_csv(const std::string& path, const std::string& stamp, const Table& table);
void write_csv(const std::string& path, const std::string& stamp, const TextTable& table);

/// Read a numeric CSV artifact back; `stamp` (when non-null) receives the
/// config hash from the header line.  Throws std::runtime_error with the path
/// and line on malformed input.
Table read_csv(const std::string& path, std::string* stamp = nullptr);

/// JSON artifact skeleton: `{"header": {"tool", "version", "config"}}` with
/// the header first (insertion order is preserved on output).
nlohmann::ordered_json stamped_json(const std::string& stamp);

void write_json(const std::string& path, const nlohmann::ordered_json& doc);
nlohmann::ordered_json read_json(const std::string& path);

} // namespace blowlab
