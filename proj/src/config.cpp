#include "blowlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "blowlab/families.hpp"
#include "blowlab/report.hpp"

namespace blowlab {

namespace {

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
    throw ConfigError(source + ":" + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& source, std::size_t line, const std::string& key,
                    const std::string& value) {
    double v = 0.0;
    const char* first = value.data();
    const char* last = first + value.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        fail(source, line, "expected a number for '" + key + "', got '" + value + "'");
    return v;
}

long long parse_integer(const std::string& source, std::size_t line, const std::string& key,
                        const std::string& value) {
    long long v = 0;
    const char* first = value.data();
    const char* last = first + value.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        fail(source, line, "expected an integer for '" + key + "', got '" + value + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto comma = value.find(',', start);
        const auto item = trim(value.substr(start, comma - start));
        if (!item.empty() && std::find(items.begin(), items.end(), item) == items.end())
            items.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return items;
}

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
    throw ConfigError("field '" + field + "': " + what);
}

const char* bc_name(BoundaryKind bc) {
    return bc == BoundaryKind::dirichlet ? "dirichlet" : "truncated_free";
}

} // namespace

const std::vector<std::string>& known_checks() {
    static const std::vector<std::string> names = {"certify", "type_I",  "profiles",
                                                   "final_profile", "energy", "defect"};
    return names;
}

const std::vector<std::string>& default_checks() {
    static const std::vector<std::string> names = {"type_I", "profiles", "final_profile",
                                                   "energy", "defect"};
    return names;
}

std::vector<std::string> effective_checks(const ExperimentConfig& cfg) {
    return cfg.checks.empty() ? default_checks() : cfg.checks;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    ExperimentConfig cfg;
    // The default initial_params belong to the default bump; once the file
    // speaks up about [initial] at all, it states the parameters in full.
    bool saw_initial_kind = false;
    bool saw_initial_param = false;

    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const auto line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(source, lineno, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            static const std::vector<std::string> sections = {"family", "domain",  "initial",
                                                              "solver", "checks", "output"};
            if (std::find(sections.begin(), sections.end(), section) == sections.end())
                fail(source, lineno, "unknown section '" + section + "'");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(source, lineno, "expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) fail(source, lineno, "empty key");
        if (section.empty()) fail(source, lineno, "'" + key + "' appears before any section");

        if (section == "family") {
            if (key == "name")
                cfg.family = value;
            else
                cfg.family_params[key] = parse_double(source, lineno, key, value);
        } else if (section == "domain") {
            if (key == "n")
                cfg.n = static_cast<int>(parse_integer(source, lineno, key, value));
            else if (key == "R")
                cfg.R = parse_double(source, lineno, key, value);
            else if (key == "bc") {
                if (value == "dirichlet")
                    cfg.bc = BoundaryKind::dirichlet;
                else if (value == "truncated_free")
                    cfg.bc = BoundaryKind::truncated_free;
                else
                    fail(source, lineno,
                         "'bc' must be dirichlet or truncated_free, got '" + value + "'");
            } else
                fail(source, lineno, "unknown key '" + key + "' in [domain]");
        } else if (section == "initial") {
            if (key == "kind") {
                cfg.initial_kind = value;
                saw_initial_kind = true;
            } else {
                if (!saw_initial_param) cfg.initial_params.clear();
                saw_initial_param = true;
                cfg.initial_params[key] = parse_double(source, lineno, key, value);
            }
        } else if (section == "solver") {
            if (key == "J") {
                const long long J = parse_integer(source, lineno, key, value);
                if (J < 0) fail(source, lineno, "'J' must be nonnegative");
                cfg.J = static_cast<std::size_t>(J);
            } else if (key == "grading")
                cfg.grading = parse_double(source, lineno, key, value);
            else if (key == "safety")
                cfg.safety = parse_double(source, lineno, key, value);
            else if (key == "u_cap")
                cfg.u_cap = parse_double(source, lineno, key, value);
            else
                fail(source, lineno, "unknown key '" + key + "' in [solver]");
        } else if (section == "checks") {
            if (key == "enable")
                cfg.checks = split_list(value);
            else
                fail(source, lineno, "unknown key '" + key + "' in [checks]");
        } else { // output
            if (key == "dir")
                cfg.output_dir = value;
            else if (key == "seed") {
                const long long seed = parse_integer(source, lineno, key, value);
                if (seed < 0) fail(source, lineno, "'seed' must be nonnegative");
                cfg.seed = static_cast<std::uint64_t>(seed);
            } else
                fail(source, lineno, "unknown key '" + key + "' in [output]");
        }
    }
    if (saw_initial_kind && !saw_initial_param) cfg.initial_params.clear();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path);
}

void validate(const ExperimentConfig& cfg) {
    try {
        (void)make_builtin(cfg.family, cfg.family_params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[family] ") + e.what());
    }
    if (cfg.n < 1 || cfg.n > 9) bad_field("n", "dimension must be in [1, 9]");
    if (!(cfg.R > 0.0)) bad_field("R", "radius must be positive");
    if (cfg.J < 8) bad_field("J", "need at least 8 intervals");
    if (cfg.J > 1000000) bad_field("J", "more than 1e6 intervals is not supported");
    if (!(cfg.grading >= 1.0)) bad_field("grading", "spacing ratio must be >= 1");
    if (!(cfg.safety > 0.0 && cfg.safety <= 1.0)) bad_field("safety", "must lie in (0, 1]");
    if (!(cfg.u_cap >= 0.0)) bad_field("u_cap", "must be >= 0 (0 = per-family default)");
    static const std::vector<std::string> kinds = {"bump", "plateau", "constant"};
    if (std::find(kinds.begin(), kinds.end(), cfg.initial_kind) == kinds.end())
        bad_field("kind", "unknown initial data '" + cfg.initial_kind + "'");
    for (const auto& c : cfg.checks) {
        const auto& known = known_checks();
        if (std::find(known.begin(), known.end(), c) == known.end())
            bad_field("enable", "unknown check '" + c + "'");
    }
    if (cfg.output_dir.empty()) bad_field("dir", "output directory must not be empty");
}

std::string canonical_dump(const ExperimentConfig& cfg) {
    std::string out;
    out += "[family]\nname = " + cfg.family + "\n";
    for (const auto& [k, v] : cfg.family_params) out += k + " = " + format_double(v) + "\n";
    out += "[domain]\nn = " + std::to_string(cfg.n) + "\nR = " + format_double(cfg.R) +
           "\nbc = " + bc_name(cfg.bc) + "\n";
    out += "[initial]\nkind = " + cfg.initial_kind + "\n";
    for (const auto& [k, v] : cfg.initial_params) out += k + " = " + format_double(v) + "\n";
    out += "[solver]\nJ = " + std::to_string(cfg.J) + "\ngrading = " + format_double(cfg.grading) +
           "\nsafety = " + format_double(cfg.safety) + "\nu_cap = " + format_double(cfg.u_cap) +
           "\n";
    if (!cfg.checks.empty()) {
        out += "[checks]\nenable = ";
        for (std::size_t i = 0; i < cfg.checks.size(); ++i)
            out += (i ? ", " : "") + cfg.checks[i];
        out += "\n";
    }
    out += "[output]\ndir = " + cfg.output_dir + "\nseed = " + std::to_string(cfg.seed) + "\n";
    return out;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a(canonical_dump(cfg)); }

std::string config_stamp(const ExperimentConfig& cfg) { return hex_stamp(config_hash(cfg)); }

} // namespace blowlab
