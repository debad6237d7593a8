#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "blowlab/report.hpp"

namespace blowlab {

/// Canonical desk-scale parameter choices for each builtin family: the values
/// every cross-module check is calibrated against.  Unknown names throw
/// std::invalid_argument listing the builtins.
std::map<std::string, double> canonical_params(const std::string& family);
std::vector<std::string> canonical_families();

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;      ///< substance verdict AND finished inside budget
    double seconds = 0.0;   ///< wall time spent on this criterion
    double budget_seconds = 0.0;
    std::string detail;     ///< measured numbers behind the verdict
};

struct AcceptanceReport {
    std::vector<CriterionResult> items;
    bool all_pass = false;
};

/// Run the full acceptance suite: closed-form oracles, round trips,
/// convergence rates, the reaction-only solver oracle, the reference blow-up
/// runs with their profile/energy/defect trend checks, and the self-similar
/// membership scans.  Streams one "[ k] PASS/FAIL title - detail (t s)" line
/// per criterion to `log` when given.  `jobs` parallelizes independent runs
/// and scans inside a criterion; criteria themselves stay sequential.
AcceptanceReport run_acceptance(std::ostream* log = nullptr, int jobs = 1);

/// Fixed-width verdict table plus an overall line.
std::string render_table(const AcceptanceReport& rep);

/// JSON rendering under the usual stamped header.
nlohmann::ordered_json acceptance_json(const std::string& stamp, const AcceptanceReport& rep);

} // namespace blowlab
