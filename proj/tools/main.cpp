#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "blowlab/acceptance.hpp"
#include "blowlab/config.hpp"
#include "blowlab/pipeline.hpp"
#include "blowlab/report.hpp"
#include "blowlab/selfsim.hpp"
#include "blowlab/version.hpp"

namespace {

using namespace blowlab;

// Exit codes: 0 pass, 1 check failure, 2 usage/config error, 3 numeric failure.
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

/// Configless subcommands stamp their artifacts with a hash of the canonical
/// argument string, playing the role config_stamp plays for simulate.
std::string args_stamp(const std::string& canonical) { return hex_stamp(fnv1a(canonical)); }

double parse_value(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto* last = text.data() + text.size();
    const auto res = std::from_chars(text.data(), last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw std::invalid_argument("--param " + key + ": not a number: '" + text + "'");
    return v;
}

/// --param entries are key=value; values override the canonical choice.
std::map<std::string, double> merge_params(const std::string& family,
                                           const std::vector<std::string>& overrides) {
    auto params = canonical_params(family);
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("--param expects key=value, got '" + item + "'");
        params[item.substr(0, eq)] = parse_value(item.substr(0, eq), item.substr(eq + 1));
    }
    return params;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create '" + dir + "': " + ec.message());
}

void print_verdicts(const PipelineResult& result) {
    if (result.simulated) std::cout << "T_est = " << format_double(result.T_est) << "\n";
    for (const auto& v : result.verdicts)
        std::cout << "  [" << (v.pass ? "PASS" : "FAIL") << "] " << v.name << " - " << v.detail
                  << "\n";
    std::cout << "artifacts in " << result.output_dir << " (config " << result.stamp << ")\n";
}

int run_certify(const std::string& family, const std::vector<std::string>& overrides,
                double tol, std::uint64_t seed, const std::string& out) {
    const auto params = merge_params(family, overrides);
    std::string canonical = "certify " + family + " tol=" + format_double(tol) +
                            " seed=" + std::to_string(seed);
    for (const auto& [key, value] : params) canonical += " " + key + "=" + format_double(value);
    const auto stamp = args_stamp(canonical);

    const auto rep = certify_family(make_builtin(family, params), tol, seed);
    const auto doc = certify_report_json(stamp, rep);
    std::cout << doc.dump(2) << "\n";
    if (!out.empty()) {
        ensure_dir(out);
        write_json(out + "/certify.json", doc);
    }
    return rep.pass ? 0 : 1;
}

int run_simulate(const std::string& config_path, const std::string& out) {
    auto cfg = load_config(config_path);
    if (!out.empty()) cfg.output_dir = out;
    const auto result = run(cfg);
    print_verdicts(result);
    return result.exit_code;
}

int run_profiles(const std::string& run_dir) {
    const auto result = rerun_profiles(run_dir);
    std::cout << "T_est = " << format_double(result.T_est) << " (from " << run_dir << ")\n";
    for (const auto& v : result.verdicts)
        std::cout << "  [" << (v.pass ? "PASS" : "FAIL") << "] " << v.name << " - " << v.detail
                  << "\n";
    return result.exit_code;
}

Table shot_table(const ProfileShot& shot) {
    Table tab{{"r", "z", "z_r", "g"}, {}};
    for (std::size_t i = 0; i < shot.r.size(); ++i)
        tab.rows.push_back(
            {shot.r[i], shot.z[i], shot.z_r[i], 1.0 + shot.r[i] * shot.z_r[i] / 2.0});
    return tab;
}

int run_selfsim(int n, double a, bool do_scan, double tol, const std::string& out) {
    ShootOptions opt;
    opt.tol = tol;
    ensure_dir(out);

    if (!do_scan) {
        const std::string canonical = "selfsim n=" + std::to_string(n) +
                                      " a=" + format_double(a) + " tol=" + format_double(tol);
        const auto stamp = args_stamp(canonical);
        const auto shot = shoot(n, a, opt);
        write_csv(out + "/shot.csv", stamp, shot_table(shot));
        auto doc = stamped_json(stamp);
        doc["n"] = n;
        doc["a"] = a;
        doc["classification"] = to_string(shot.classification);
        doc["r_stop"] = shot.r_stop;
        if (!shot.note.empty()) doc["note"] = shot.note;
        doc["artifacts"] = {"shot.csv"};
        std::cout << doc.dump(2) << "\n";
        return 0;
    }

    const std::string canonical =
        "selfsim n=" + std::to_string(n) + " scan tol=" + format_double(tol);
    const auto stamp = args_stamp(canonical);
    const auto res = scan(n, 0.0, 10.0, 40, 1e-10, opt);
    TextTable grid{{"a", "classification"}, {}};
    for (std::size_t i = 0; i < res.a_values.size(); ++i)
        grid.rows.push_back({format_double(res.a_values[i]), to_string(res.classes[i])});
    write_csv(out + "/scan.csv", stamp, grid);

    auto doc = stamped_json(stamp);
    doc["n"] = n;
    doc["a_range"] = {0.0, 10.0};
    auto transitions = nlohmann::ordered_json::array();
    for (const auto& tr : res.transitions)
        transitions.push_back({{"a_lo", tr.a_lo},
                               {"a_hi", tr.a_hi},
                               {"lo_class", to_string(tr.lo_class)},
                               {"hi_class", to_string(tr.hi_class)}});
    doc["transitions"] = std::move(transitions);
    auto members = nlohmann::ordered_json::array();
    std::vector<std::string> artifacts{"scan.csv"};
    for (std::size_t i = 0; i < res.members.size(); ++i) {
        const auto& m = res.members[i];
        const std::string name = "member_" + std::to_string(i + 1) + ".csv";
        write_csv(out + "/" + name, stamp, shot_table(m.shot));
        artifacts.push_back(name);
        members.push_back({{"a_star", m.a_star},
                           {"C", m.C},
                           {"mu", m.mu},
                           {"ode_residual_sup", m.ode_residual_sup},
                           {"nontrivial", m.nontrivial},
                           {"shot_csv", name}});
    }
    doc["members"] = std::move(members);
    doc["artifacts"] = artifacts;
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int run_accept(const std::string& out, int jobs) {
    const auto rep = run_acceptance(&std::cout, jobs);
    std::cout << "\n" << render_table(rep);
    if (!out.empty()) {
        ensure_dir(out);
        write_json(out + "/accept.json", acceptance_json(args_stamp("accept"), rep));
        std::cout << "report in " << out << "/accept.json\n";
    }
    return rep.all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kToolName) +
                 ": blow-up laboratory for u_t - Lap u = e^u L(e^u) with slowly varying L"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
    app.require_subcommand(1);
    int jobs = 1;
    app.add_option("--jobs", jobs, "threads for independent runs/scans (acceptance suite)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    auto* certify = app.add_subcommand("certify", "certify one nonlinearity family");
    std::string cert_family;
    std::vector<std::string> cert_params;
    double cert_tol = 1e-12;
    std::uint64_t cert_seed = 0;
    std::string cert_out;
    certify->add_option("family", cert_family, "builtin family name")->required();
    certify->add_option("--param", cert_params, "override a family parameter (key=value)");
    certify->add_option("--tol", cert_tol, "resolvent accuracy target")->capture_default_str();
    certify->add_option("--seed", cert_seed, "seed for the round-trip sample points")
        ->capture_default_str();
    certify->add_option("--out", cert_out, "also write certify.json into this directory");

    auto* simulate = app.add_subcommand("simulate", "run one configured experiment");
    std::string sim_config_pos, sim_config_flag, sim_out;
    simulate->add_option("path", sim_config_pos, "experiment config file");
    simulate->add_option("--config", sim_config_flag, "experiment config file (alternative)");
    simulate->add_option("--out", sim_out, "override the configured output directory");

    auto* profiles = app.add_subcommand("profiles", "recompute profile checks from a run");
    std::string prof_dir;
    profiles->add_option("rundir", prof_dir, "output directory of a finished simulate run")
        ->required();

    auto* selfsim = app.add_subcommand("selfsim", "backward self-similar profile shooting");
    int ss_n = 1;
    double ss_a = 1.0, ss_tol = 1e-10;
    bool ss_scan = false;
    std::string ss_out = "out";
    selfsim->add_option("n", ss_n, "space dimension")->required()->check(CLI::Range(1, 9));
    selfsim->add_option("--a", ss_a, "center value z(0) for a single shot")
        ->capture_default_str();
    selfsim->add_flag("--scan", ss_scan, "scan a in (0, 10] and certify members");
    selfsim->add_option("--tol", ss_tol, "integration tolerance")->capture_default_str();
    selfsim->add_option("--out", ss_out, "output directory")->capture_default_str();

    auto* accept = app.add_subcommand("accept", "run the full acceptance suite");
    std::string acc_out;
    accept->add_option("--out", acc_out, "also write accept.json into this directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (app.got_subcommand(certify))
            return run_certify(cert_family, cert_params, cert_tol, cert_seed, cert_out);
        if (app.got_subcommand(simulate)) {
            if (sim_config_pos.empty() == sim_config_flag.empty())
                throw std::invalid_argument(
                    "simulate needs exactly one config path (positional or --config)");
            return run_simulate(sim_config_pos.empty() ? sim_config_flag : sim_config_pos,
                                sim_out);
        }
        if (app.got_subcommand(profiles)) return run_profiles(prof_dir);
        if (app.got_subcommand(selfsim)) return run_selfsim(ss_n, ss_a, ss_scan, ss_tol, ss_out);
        return run_accept(acc_out, jobs);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const PipelineError& e) {
        std::cerr << "numeric failure, " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}
