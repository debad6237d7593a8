#include "blowlab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

#include "blowlab/pde.hpp"
#include "blowlab/profiles.hpp"
#include "blowlab/report.hpp"
#include "blowlab/similarity.hpp"

namespace blowlab {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::vector<double> log_spaced(double lo, double hi, int m) {
    std::vector<double> v(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        v[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, double(i) / double(m - 1));
    return v;
}

bool enabled(const std::vector<std::string>& checks, const std::string& name) {
    return std::find(checks.begin(), checks.end(), name) != checks.end();
}

/// Gate for one asymptotic check: meet the absolute bound at the last grid
/// point.  Oscillating families wobble mid-grid, so raw monotonicity is not
/// required where the bound holds; the weighted inverse gap, whose bound is
/// unattainable at desk scale, gates on its trend instead (see CertifyReport).
bool trend_gate(const LemmaCheck& chk) {
    return chk.within || (chk.decreasing && chk.name == "inverse_gap");
}

const char* status_name(RunStatus st) {
    switch (st) {
        case RunStatus::completed: return "completed";
        case RunStatus::resolution_exhausted: return "resolution_exhausted";
        default: return "step_limit";
    }
}

void write_text_artifact(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error(path + ": write failed");
}

} // namespace

CertifyReport certify_family(const NonlinearityFamily& fam, double tol, std::uint64_t seed) {
    CertifyReport rep;
    rep.family = fam.name();
    rep.alpha = fam.certified_alpha();

    ResolventOptions opt;
    opt.tol = tol;
    ResolventTable table(fam, opt);

    // Slow variation wants a wide log-argument grid: the oscillating families
    // are judged by their decay envelope, which needs many periods in view.
    const double x_floor = std::log(fam.s_pos()) + 1.0;
    rep.slow_variation_pass = certify_slow_variation(
                                  fam, rep.alpha, log_spaced(std::max(100.0, x_floor), 1e7, 56))
                                  .pass;
    rep.uniform_ratio_pass = certify_uniform_ratio(
                                 fam, 0.75, log_spaced(std::max(20.0, x_floor), 200.0, 12))
                                 .pass;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> draw_g(table.domain_floor() + 2.0, 40.0);
    std::uniform_real_distribution<double> draw_h(table.domain_floor_H() + 2.0, 40.0);
    for (int i = 0; i < 32; ++i) {
        const double xg = draw_g(rng);
        rep.round_trip_G = std::max(
            rep.round_trip_G, std::abs(table.G_inv(table.G(xg)) - xg) / std::max(1.0, xg));
        const double xh = draw_h(rng);
        rep.round_trip_H = std::max(
            rep.round_trip_H, std::abs(table.H_inv(table.H(xh)) - xh) / std::max(1.0, xh));
    }
    rep.round_trips_pass = rep.round_trip_G <= 1e-9 && rep.round_trip_H <= 1e-9;

    rep.asymptotics = certify_asymptotic_lemmas(table);
    rep.asymptotics_pass = true;
    for (const auto& chk : rep.asymptotics.checks)
        if (!trend_gate(chk)) rep.asymptotics_pass = false;

    rep.pass = rep.slow_variation_pass && rep.uniform_ratio_pass && rep.round_trips_pass &&
               rep.asymptotics_pass;
    return rep;
}

nlohmann::ordered_json certify_report_json(const std::string& stamp, const CertifyReport& rep) {
    auto doc = stamped_json(stamp);
    doc["family"] = rep.family;
    doc["alpha"] = rep.alpha;
    doc["slow_variation_pass"] = rep.slow_variation_pass;
    doc["uniform_ratio_pass"] = rep.uniform_ratio_pass;
    doc["round_trip_G"] = rep.round_trip_G;
    doc["round_trip_H"] = rep.round_trip_H;
    doc["round_trips_pass"] = rep.round_trips_pass;
    auto checks = nlohmann::ordered_json::array();
    for (const auto& chk : rep.asymptotics.checks) {
        checks.push_back({{"name", chk.name},
                          {"grid", chk.grid},
                          {"values", chk.values},
                          {"threshold", chk.threshold},
                          {"decreasing", chk.decreasing},
                          {"within", chk.within},
                          {"trend_certified", trend_gate(chk)}});
    }
    doc["asymptotic_checks"] = std::move(checks);
    doc["asymptotics_pass"] = rep.asymptotics_pass;
    doc["pass"] = rep.pass;
    return doc;
}

PipelineResult run(const ExperimentConfig& cfg) {
    validate(cfg);
    const auto checks = effective_checks(cfg);

    PipelineResult res;
    res.output_dir = cfg.output_dir;
    res.stamp = config_stamp(cfg);

    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec)
        throw PipelineError("setup", "cannot create '" + cfg.output_dir + "': " + ec.message());
    const auto path = [&](const std::string& name) { return cfg.output_dir + "/" + name; };
    const auto emit = [&](const std::string& name) { res.artifacts.push_back(name); };

    std::shared_ptr<const ResolventTable> table;
    try {
        write_text_artifact(path("config.txt"),
                            artifact_header(res.stamp) + "\n" + canonical_dump(cfg));
        emit("config.txt");
        table = std::make_shared<const ResolventTable>(
            make_builtin(cfg.family, cfg.family_params));
    } catch (const std::exception& e) {
        throw PipelineError("setup", e.what());
    }

    if (enabled(checks, "certify")) {
        const auto rep = certify_family(table->family(), table->tol(), cfg.seed);
        write_json(path("certify.json"), certify_report_json(res.stamp, rep));
        emit("certify.json");
        res.verdicts.push_back(
            {"certify", rep.pass,
             "round trips G<=" + fmt(rep.round_trip_G) + " H<=" + fmt(rep.round_trip_H) +
                 "; slow variation at alpha=" + fmt(rep.alpha) +
                 (rep.slow_variation_pass ? " pass" : " FAIL") + "; uniform ratio " +
                 (rep.uniform_ratio_pass ? "pass" : "FAIL") + "; asymptotics " +
                 (rep.asymptotics_pass ? "certified" : "FAIL")});
    }

    const bool needs_sim = std::any_of(checks.begin(), checks.end(),
                                       [](const std::string& c) { return c != "certify"; });
    if (needs_sim) {
        std::shared_ptr<const RadialGrid> grid;
        InitialDataReport init;
        RunResult sim;
        try {
            grid = std::make_shared<const RadialGrid>(
                RadialGrid::graded(cfg.n, cfg.R, cfg.J, cfg.grading, cfg.bc));
            init = make_initial_data(*grid, cfg.initial_kind, cfg.initial_params,
                                     table->family(), true);
            RadialState st;
            st.grid = grid;
            st.u = init.u;
            SolverOptions opt;
            opt.safety = cfg.safety;
            sim = run_to_cap(std::move(st), table->family(), *table, opt, cfg.u_cap);
        } catch (const std::exception& e) {
            throw PipelineError("simulate", e.what());
        }
        res.simulated = true;
        res.T_est = sim.estimate.T_est;

        {
            Table trace{{"t", "u0", "dt", "T_running"}, {}};
            for (std::size_t i = 0; i < sim.traj_t.size(); ++i)
                trace.rows.push_back(
                    {sim.traj_t[i], sim.traj_u0[i], sim.traj_dt[i], sim.traj_T_running[i]});
            write_csv(path("trace.csv"), res.stamp, trace);
            emit("trace.csv");

            Table snaps{{"level", "t", "r", "u"}, {}};
            for (const auto& snap : sim.snapshots)
                for (std::size_t j = 0; j < snap.u.size(); ++j)
                    snaps.rows.push_back(
                        {double(snap.level), snap.t, grid->nodes()[j], snap.u[j]});
            write_csv(path("snapshots.csv"), res.stamp, snaps);
            emit("snapshots.csv");

            Table fin{{"r", "u"}, {}};
            for (std::size_t j = 0; j < sim.snapshots.back().u.size(); ++j)
                fin.rows.push_back({grid->nodes()[j], sim.snapshots.back().u[j]});
            write_csv(path("final_state.csv"), res.stamp, fin);
            emit("final_state.csv");

            auto meta = stamped_json(res.stamp);
            meta["family"] = cfg.family;
            meta["n"] = cfg.n;
            meta["T_est"] = sim.estimate.T_est;
            meta["T_ci"] = sim.estimate.ci;
            meta["low_confidence"] = sim.estimate.low_confidence;
            meta["status"] = status_name(sim.status);
            meta["steps"] = sim.steps;
            meta["t_end"] = sim.t_end;
            meta["u_cap"] = sim.u_cap;
            meta["final_state_t"] = sim.snapshots.back().t;
            meta["monotone_time_check"] = {{"requested", init.monotone_time_requested},
                                           {"pass", init.monotone_time_pass},
                                           {"worst_value", init.worst_value},
                                           {"worst_radius", init.worst_radius}};
            std::vector<int> levels;
            for (const auto& snap : sim.snapshots) levels.push_back(snap.level);
            meta["snapshot_levels"] = levels;
            write_json(path("run_meta.json"), meta);
            emit("run_meta.json");
        }

        // Rescale while the grid still resolves the core; the ladder ends at
        // the first under-resolved frame.
        OdeSolution ode(table, res.T_est);
        std::vector<SimilarityFrame> frames;
        std::string frames_end = "all snapshots usable";
        try {
            for (const auto& snap : sim.snapshots) {
                try {
                    frames.push_back(to_frame(*grid, snap, res.T_est, ode));
                } catch (const std::invalid_argument& e) {
                    frames_end = e.what();
                    break;
                }
            }
            Table ftab{{"s", "psi1", "y_max", "y", "w", "w_y"}, {}};
            for (const auto& fr : frames)
                for (std::size_t j = 0; j < fr.y.size(); ++j)
                    ftab.rows.push_back({fr.s, fr.psi1, fr.y_max, fr.y[j], fr.w[j], fr.w_y[j]});
            write_csv(path("frames.csv"), res.stamp, ftab);
            emit("frames.csv");
        } catch (const std::exception& e) {
            throw PipelineError("similarity", e.what());
        }

        ProfilePrediction pred;
        pred.table = table;
        pred.T = res.T_est;
        pred.n = cfg.n;

        if (enabled(checks, "type_I")) {
            CheckVerdict v{"type_I", false, ""};
            try {
                const auto diag = diagnostics(sim, *table);
                v.pass = diag.type_I_bounded && diag.grad_bounded;
                v.detail = "residual sup=" + fmt(diag.type_I_sup) +
                           " early=" + fmt(diag.type_I_early_max) +
                           " late=" + fmt(diag.type_I_late_max) +
                           "; scaled gradient bounded=" + (diag.grad_bounded ? "yes" : "no") +
                           ", A_hat=" + fmt(diag.A_hat);
            } catch (const std::exception& e) {
                v.detail = e.what();
            }
            res.verdicts.push_back(std::move(v));
        }
        if (enabled(checks, "profiles")) {
            CheckVerdict v{"profiles", false, ""};
            try {
                const auto cmp = compare(pred, frames);
                Table tab{{"s", "theta", "global_sup_gap", "refined_sup_gap",
                           "second_at_center", "second_sup_dev"},
                          {}};
                for (const auto& pt : cmp.points)
                    tab.rows.push_back({pt.s, pt.theta, pt.global_sup_gap, pt.refined_sup_gap,
                                        pt.second_at_center, pt.second_sup_dev});
                write_csv(path("profile_checkpoints.csv"), res.stamp, tab);
                emit("profile_checkpoints.csv");
                v.pass = cmp.refined_improving;
                v.detail = "refined gap " + fmt(cmp.points.front().refined_sup_gap) + " -> " +
                           fmt(cmp.points.back().refined_sup_gap) + " over s in [" +
                           fmt(cmp.points.front().s) + ", " + fmt(cmp.points.back().s) +
                           "]; window-dependent trends reported: global_improving=" +
                           (cmp.global_improving ? "yes" : "no") +
                           ", second_toward_2n=" + (cmp.second_toward_2n ? "yes" : "no");
            } catch (const std::exception& e) {
                v.detail = e.what();
            }
            res.verdicts.push_back(std::move(v));
        }
        if (enabled(checks, "final_profile")) {
            CheckVerdict v{"final_profile", false, ""};
            try {
                const auto fin = compare_final(pred, *grid, sim.snapshots.back().u);
                Table tab{{"x", "rel_gap"}, {}};
                for (std::size_t i = 0; i < fin.x.size(); ++i)
                    tab.rows.push_back({fin.x[i], fin.rel_gap[i]});
                write_csv(path("final_profile.csv"), res.stamp, tab);
                emit("final_profile.csv");
                v.pass = fin.gap_decreasing_in_x;
                v.detail = "relative gap " + fmt(fin.rel_gap.front()) + " -> " +
                           fmt(fin.rel_gap.back()) + " over |x| in [" + fmt(fin.x.front()) +
                           ", " + fmt(fin.x.back()) + "]";
            } catch (const std::exception& e) {
                v.detail = e.what();
            }
            res.verdicts.push_back(std::move(v));
        }
        if (enabled(checks, "energy")) {
            CheckVerdict v{"energy", false, ""};
            try {
                const auto trace = build_energy_trace(frames, table->family());
                Table tab{{"s", "E", "curlyE", "L2rho", "H1rho"}, {}};
                for (std::size_t i = 0; i < trace.s_values.size(); ++i)
                    tab.rows.push_back({trace.s_values[i], trace.E_values[i],
                                        trace.curlyE_values[i], trace.L2rho[i],
                                        trace.H1rho[i]});
                write_csv(path("energy.csv"), res.stamp, tab);
                emit("energy.csv");
                v.pass = trace.monotone_pass && std::isfinite(trace.min_curlyE);
                v.detail = "nonincreasing=" + std::string(trace.monotone_pass ? "yes" : "no") +
                           " at C1=" + fmt(trace.C1) + "; bounded below by " +
                           fmt(trace.min_curlyE);
            } catch (const std::exception& e) {
                v.detail = e.what();
            }
            res.verdicts.push_back(std::move(v));
        }
        if (enabled(checks, "defect")) {
            CheckVerdict v{"defect", false, ""};
            try {
                const auto dz = defect_decay(frames, table->family(), ode);
                Table tab{{"s", "max_H", "scaled"}, {}};
                for (std::size_t i = 0; i < dz.s_values.size(); ++i)
                    tab.rows.push_back({dz.s_values[i], dz.max_H[i], dz.scaled[i]});
                write_csv(path("defect.csv"), res.stamp, tab);
                emit("defect.csv");
                v.pass = dz.pass;
                v.detail = "max|H| " + fmt(dz.max_H.front()) + " -> " + fmt(dz.max_H.back()) +
                           " over s in [" + fmt(dz.s_values.front()) + ", " +
                           fmt(dz.s_values.back()) + "]";
            } catch (const std::exception& e) {
                v.detail = e.what();
            }
            res.verdicts.push_back(std::move(v));
        }
    }

    res.exit_code = 0;
    for (const auto& v : res.verdicts)
        if (!v.pass) res.exit_code = 1;

    auto summary = stamped_json(res.stamp);
    summary["config_file"] = "config.txt";
    summary["simulated"] = res.simulated;
    if (res.simulated) summary["T_est"] = res.T_est;
    auto verdicts = nlohmann::ordered_json::array();
    for (const auto& v : res.verdicts)
        verdicts.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
    summary["checks"] = std::move(verdicts);
    summary["exit_code"] = res.exit_code;
    emit("summary.json");
    summary["artifacts"] = res.artifacts;
    write_json(path("summary.json"), summary);

    return res;
}

PipelineResult rerun_profiles(const std::string& run_dir) {
    const auto need = [&](const std::string& name) {
        const auto p = run_dir + "/" + name;
        if (!std::filesystem::exists(p))
            throw ConfigError(p + ": missing (not a finished simulation directory?)");
        return p;
    };

    // The config echo reproduces the exact grid and table of the original run.
    ExperimentConfig cfg;
    {
        std::ifstream in(need("config.txt"));
        std::ostringstream text;
        text << in.rdbuf();
        auto body = text.str();
        if (!body.empty() && body.front() == '#') body.erase(0, body.find('\n') + 1);
        cfg = parse_config(body, run_dir + "/config.txt");
        validate(cfg);
    }
    const auto meta = read_json(need("run_meta.json"));
    const auto frames_tab = read_csv(need("frames.csv"));
    const auto final_tab = read_csv(need("final_state.csv"));

    PipelineResult res;
    res.output_dir = run_dir;
    res.stamp = config_stamp(cfg);
    res.simulated = false;

    try {
        res.T_est = meta.at("T_est").get<double>();
        auto table = std::make_shared<const ResolventTable>(
            make_builtin(cfg.family, cfg.family_params));
        const auto grid = RadialGrid::graded(cfg.n, cfg.R, cfg.J, cfg.grading, cfg.bc);

        if (frames_tab.columns != std::vector<std::string>{"s", "psi1", "y_max", "y", "w", "w_y"})
            throw std::runtime_error("frames.csv: unexpected columns");
        std::vector<SimilarityFrame> frames;
        for (const auto& row : frames_tab.rows) {
            if (frames.empty() || frames.back().s != row[0]) {
                SimilarityFrame fr;
                fr.s = row[0];
                fr.T_est = res.T_est;
                fr.n = cfg.n;
                fr.psi1 = row[1];
                fr.y_max = row[2];
                frames.push_back(std::move(fr));
            }
            frames.back().y.push_back(row[3]);
            frames.back().w.push_back(row[4]);
            frames.back().w_y.push_back(row[5]);
        }

        if (final_tab.columns != std::vector<std::string>{"r", "u"} ||
            final_tab.rows.size() != grid.nodes().size())
            throw std::runtime_error("final_state.csv does not match the configured grid");
        std::vector<double> u_final;
        for (std::size_t i = 0; i < final_tab.rows.size(); ++i) {
            if (final_tab.rows[i][0] != grid.nodes()[i])
                throw std::runtime_error("final_state.csv node radii disagree with the grid");
            u_final.push_back(final_tab.rows[i][1]);
        }

        ProfilePrediction pred;
        pred.table = table;
        pred.T = res.T_est;
        pred.n = cfg.n;

        const auto path = [&](const std::string& name) { return run_dir + "/" + name; };
        {
            CheckVerdict v{"profiles", false, ""};
            const auto cmp = compare(pred, frames);
            Table tab{{"s", "theta", "global_sup_gap", "refined_sup_gap", "second_at_center",
                       "second_sup_dev"},
                      {}};
            for (const auto& pt : cmp.points)
                tab.rows.push_back({pt.s, pt.theta, pt.global_sup_gap, pt.refined_sup_gap,
                                    pt.second_at_center, pt.second_sup_dev});
            write_csv(path("profile_checkpoints.csv"), res.stamp, tab);
            res.artifacts.push_back("profile_checkpoints.csv");
            v.pass = cmp.refined_improving;
            v.detail = "refined gap " + fmt(cmp.points.front().refined_sup_gap) + " -> " +
                       fmt(cmp.points.back().refined_sup_gap) + " from " +
                       std::to_string(frames.size()) + " reloaded frames";
            res.verdicts.push_back(std::move(v));
        }
        {
            CheckVerdict v{"final_profile", false, ""};
            const auto fin = compare_final(pred, grid, u_final);
            Table tab{{"x", "rel_gap"}, {}};
            for (std::size_t i = 0; i < fin.x.size(); ++i)
                tab.rows.push_back({fin.x[i], fin.rel_gap[i]});
            write_csv(path("final_profile.csv"), res.stamp, tab);
            res.artifacts.push_back("final_profile.csv");
            v.pass = fin.gap_decreasing_in_x;
            v.detail = "relative gap " + fmt(fin.rel_gap.front()) + " -> " +
                       fmt(fin.rel_gap.back()) + " over |x| in [" + fmt(fin.x.front()) + ", " +
                       fmt(fin.x.back()) + "]";
            res.verdicts.push_back(std::move(v));
        }

        res.exit_code = 0;
        for (const auto& v : res.verdicts)
            if (!v.pass) res.exit_code = 1;

        auto summary = stamped_json(res.stamp);
        summary["source_run"] = run_dir;
        summary["T_est"] = res.T_est;
        auto verdicts = nlohmann::ordered_json::array();
        for (const auto& v : res.verdicts)
            verdicts.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
        summary["checks"] = std::move(verdicts);
        summary["exit_code"] = res.exit_code;
        write_json(path("profiles_summary.json"), summary);
        res.artifacts.push_back("profiles_summary.json");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError("profiles", e.what());
    }
    return res;
}

} // namespace blowlab
