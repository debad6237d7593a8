#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "blowlab/pde.hpp"

namespace blowlab {

/// Thrown for malformed or out-of-range configuration; the message names the
/// source, the line, and the offending field where one applies.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// One experiment, fully determined by one config file (reproducibility is
/// the product: identical config + seed give byte-identical CSV artifacts).
///
/// File format: INI-style sections of `key = value` lines; `#` starts a
/// comment.  Sections and keys:
///   [family]   name, plus one numeric entry per family parameter
///   [domain]   n, R, bc (dirichlet | truncated_free)
///   [initial]  kind (bump | plateau | constant), plus numeric parameters
///   [solver]   J, grading, safety, u_cap (0 = per-family default cap)
///   [checks]   enable = comma-separated list (empty = the default set)
///   [output]   dir, seed
/// Defaults reproduce the reference blow-up run: pure_exp on the unit ball,
/// bump data a=4, J=800 with grading 20.
struct ExperimentConfig {
    std::string family = "pure_exp";
    std::map<std::string, double> family_params;

    int n = 1;
    double R = 1.0;
    BoundaryKind bc = BoundaryKind::dirichlet;

    std::string initial_kind = "bump";
    std::map<std::string, double> initial_params{{"a", 4.0}, {"m", 1.0}};

    std::size_t J = 800;
    double grading = 20.0;
    double safety = 0.05;
    double u_cap = 0.0;

    std::vector<std::string> checks;
    std::string output_dir = "out";
    std::uint64_t seed = 0; ///< seeds the certification sample points

    bool operator==(const ExperimentConfig&) const = default;
};

/// Check names run() understands.  "certify" needs no simulation; the rest
/// verify a blow-up run and force one.
const std::vector<std::string>& known_checks();

/// The default simulation checks (everything except "certify").
const std::vector<std::string>& default_checks();

/// The checks run() will execute: the config's list, or default_checks()
/// when the list is empty.
std::vector<std::string> effective_checks(const ExperimentConfig& cfg);

/// Parse config text.  `source` names the origin in error messages.
/// Syntax and per-field problems throw ConfigError with line context.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");

ExperimentConfig load_config(const std::string& path);

/// Semantic validation: the family resolves with its parameters, numeric
/// fields sit in their documented ranges, and every check name is known.
/// Throws ConfigError naming the field.
void validate(const ExperimentConfig& cfg);

/// Canonical text form: fixed section order, sorted parameter keys, shortest
/// round-trip numbers.  Parsing it reproduces the config exactly, and the
/// config hash is defined over precisely these bytes.
std::string canonical_dump(const ExperimentConfig& cfg);

/// FNV-1a hash of canonical_dump(); 16 hex digits via config_stamp().
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_stamp(const ExperimentConfig& cfg);

} // namespace blowlab
