#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "blowlab/config.hpp"

using blowlab::ConfigError;
using blowlab::ExperimentConfig;
using blowlab::parse_config;
using blowlab::validate;

namespace {

/// Parses, expecting a ConfigError whose message contains `needle`.
void expect_parse_error(const std::string& text, const std::string& needle) {
    try {
        (void)parse_config(text);
        FAIL_CHECK("no error for:\n" << text);
    } catch (const ConfigError& e) {
        CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                      "missing '" << needle << "' in: " << e.what());
    }
}

void expect_invalid(const ExperimentConfig& cfg, const std::string& needle) {
    try {
        validate(cfg);
        FAIL_CHECK("validate accepted a config that should fail on " << needle);
    } catch (const ConfigError& e) {
        CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                      "missing '" << needle << "' in: " << e.what());
    }
}

} // namespace

TEST_CASE("defaults describe the reference run and validate cleanly") {
    ExperimentConfig cfg;
    CHECK(cfg.family == "pure_exp");
    CHECK(cfg.n == 1);
    CHECK(cfg.R == 1.0);
    CHECK(cfg.initial_kind == "bump");
    CHECK(cfg.initial_params.at("a") == 4.0);
    CHECK(cfg.J == 800);
    CHECK(cfg.grading == 20.0);
    CHECK(cfg.checks.empty());
    CHECK_NOTHROW(validate(cfg));
    // no [checks] section means the default set, certification excluded
    const auto checks = blowlab::effective_checks(cfg);
    CHECK(checks == blowlab::default_checks());
    CHECK(std::find(checks.begin(), checks.end(), "certify") == checks.end());
}

TEST_CASE("canonical dump parses back to the same config and hash") {
    ExperimentConfig cfg;
    cfg.family = "power_log";
    cfg.family_params = {{"q", 1.0}, {"K", 0.0}};
    cfg.n = 3;
    cfg.J = 200;
    cfg.checks = {"type_I", "energy"};
    cfg.output_dir = "runs/demo";
    cfg.seed = 7;

    const auto dump = canonical_dump(cfg);
    const auto back = parse_config(dump, "<dump>");
    CHECK(back == cfg);
    CHECK(blowlab::config_hash(back) == blowlab::config_hash(cfg));
    CHECK(canonical_dump(back) == dump);
    CHECK(blowlab::config_stamp(cfg).size() == 16);

    // the hash is defined over exactly these bytes, so any field change moves it
    auto other = cfg;
    other.J = 400;
    CHECK(blowlab::config_hash(other) != blowlab::config_hash(cfg));
}

TEST_CASE("comments and whitespace do not change the parsed config") {
    const std::string tidy = "[family]\nname = pure_exp\n[solver]\nJ = 200\n";
    const std::string messy =
        "# experiment\n\n[family]\n  name=pure_exp  # builtin\n\n[solver]\n\tJ =  200\n\n";
    CHECK(parse_config(tidy) == parse_config(messy));
}

TEST_CASE("every section round-trips through the parser") {
    const std::string text = R"([family]
name = exp_shift
nu = 0.25
sign = 1

[domain]
n = 2
R = 1.5
bc = truncated_free

[initial]
kind = plateau
a = 3
p = 0.5

[solver]
J = 96
grading = 4
safety = 0.1
u_cap = 25

[checks]
enable = certify, type_I, type_I

[output]
dir = out/demo
seed = 11
)";
    const auto cfg = parse_config(text);
    CHECK(cfg.family == "exp_shift");
    CHECK(cfg.family_params.at("nu") == 0.25);
    CHECK(cfg.n == 2);
    CHECK(cfg.R == 1.5);
    CHECK(cfg.bc == blowlab::BoundaryKind::truncated_free);
    CHECK(cfg.initial_kind == "plateau");
    CHECK(cfg.initial_params == std::map<std::string, double>{{"a", 3.0}, {"p", 0.5}});
    CHECK(cfg.J == 96);
    CHECK(cfg.grading == 4.0);
    CHECK(cfg.safety == 0.1);
    CHECK(cfg.u_cap == 25.0);
    CHECK(cfg.checks == std::vector<std::string>{"certify", "type_I"}); // deduped
    CHECK(cfg.output_dir == "out/demo");
    CHECK(cfg.seed == 11);
    CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("an explicit initial kind does not inherit the default bump parameters") {
    const auto cfg = parse_config("[initial]\nkind = constant\n");
    CHECK(cfg.initial_params.empty());
    const auto cfg2 = parse_config("[initial]\nkind = constant\na = 2\n");
    CHECK(cfg2.initial_params == std::map<std::string, double>{{"a", 2.0}});
}

TEST_CASE("parse errors carry the source line and the offending field") {
    expect_parse_error("[nosuch]\n", ":1: unknown section 'nosuch'");
    expect_parse_error("[solver]\nJ 200\n", ":2: expected 'key = value'");
    expect_parse_error("[solver]\nJ = eight\n", "expected an integer for 'J', got 'eight'");
    expect_parse_error("[solver]\nJ = -4\n", "'J' must be nonnegative");
    expect_parse_error("[domain]\nR = big\n", "expected a number for 'R', got 'big'");
    expect_parse_error("J = 200\n", "'J' appears before any section");
    expect_parse_error("[solver]\ndt = 0.1\n", "unknown key 'dt' in [solver]");
    expect_parse_error("[domain]\nbc = periodic\n", "'bc' must be dirichlet or truncated_free");
    expect_parse_error("[output]\nseed = -1\n", "'seed' must be nonnegative");
    expect_parse_error("[family\nname = pure_exp\n", "unterminated section header");
}

TEST_CASE("validation rejects out-of-range fields by name") {
    ExperimentConfig cfg;

    auto bad = cfg;
    bad.family = "nosuch";
    expect_invalid(bad, "[family]");

    bad = cfg;
    bad.n = 0;
    expect_invalid(bad, "'n'");
    bad.n = 10;
    expect_invalid(bad, "'n'");

    bad = cfg;
    bad.R = 0.0;
    expect_invalid(bad, "'R'");

    bad = cfg;
    bad.J = 4;
    expect_invalid(bad, "'J'");

    bad = cfg;
    bad.grading = 0.5;
    expect_invalid(bad, "'grading'");

    bad = cfg;
    bad.safety = 0.0;
    expect_invalid(bad, "'safety'");

    bad = cfg;
    bad.u_cap = -1.0;
    expect_invalid(bad, "'u_cap'");

    bad = cfg;
    bad.initial_kind = "spike";
    expect_invalid(bad, "'kind'");

    bad = cfg;
    bad.checks = {"type_I", "vibes"};
    expect_invalid(bad, "unknown check 'vibes'");

    bad = cfg;
    bad.output_dir = "";
    expect_invalid(bad, "'dir'");
}

TEST_CASE("canonical dump sorts family parameters") {
    ExperimentConfig cfg;
    cfg.family = "power_log";
    cfg.family_params = {{"q", 1.0}, {"K", 0.0}};
    const auto dump = canonical_dump(cfg);
    CHECK(dump.find("K = 0") < dump.find("q = 1"));
}
