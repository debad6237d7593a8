#include "blowlab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace blowlab {

namespace {

constexpr double kDtFloor = 1e-16;

void kahan_add(double& sum, double& comp, double term) {
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
}

[[noreturn]] void instability(long step, const std::string& what) {
    std::ostringstream os;
    os << "instability at step " << step << ": " << what;
    throw InstabilityError(os.str());
}

} // namespace

RadialGrid RadialGrid::graded(int n, double R, std::size_t J, double sigma, BoundaryKind bc) {
    if (n < 1) throw std::invalid_argument("RadialGrid: dimension n must be >= 1");
    if (!(R > 0.0)) throw std::invalid_argument("RadialGrid: radius R must be positive");
    if (J < 4) throw std::invalid_argument("RadialGrid: need at least 4 intervals");
    if (!(sigma >= 1.0)) throw std::invalid_argument("RadialGrid: grading sigma must be >= 1");

    const double g = (J > 1) ? std::pow(sigma, 1.0 / static_cast<double>(J - 1)) : 1.0;
    if (g > 1.2 + 1e-12)
        throw std::invalid_argument(
            "RadialGrid: grading would exceed the 1.2 adjacent-spacing ratio; raise J");

    RadialGrid grid;
    grid.n_ = n;
    grid.R_ = R;
    grid.bc_ = bc;
    grid.nodes_.resize(J + 1);
    const double h0 = (g == 1.0) ? R / static_cast<double>(J)
                                 : R * (g - 1.0) / (std::pow(g, static_cast<double>(J)) - 1.0);
    grid.nodes_[0] = 0.0;
    double h = h0;
    for (std::size_t i = 1; i <= J; ++i) {
        grid.nodes_[i] = grid.nodes_[i - 1] + h;
        h *= g;
    }
    grid.nodes_[J] = R; // absorb accumulated rounding
    grid.h_min_ = h0;
    grid.h_max_ = grid.nodes_[J] - grid.nodes_[J - 1];

    for (std::size_t i = 1; i <= J; ++i)
        if (!(grid.nodes_[i] > grid.nodes_[i - 1]))
            throw std::invalid_argument("RadialGrid: nodes failed to increase");

    // finite-volume coefficients with exact cell volumes
    const auto& r = grid.nodes_;
    auto face = [&](std::size_t i) { // r_{i+1/2}, with r_{-1/2} = 0, r_{J+1/2} = R
        if (i == J) return R;
        return 0.5 * (r[i] + r[i + 1]);
    };
    auto vol = [&](std::size_t i) {
        const double lo = (i == 0) ? 0.0 : face(i - 1);
        const double hi = face(i);
        return (std::pow(hi, n) - std::pow(lo, n)) / static_cast<double>(n);
    };
    grid.aV_.assign(J + 1, 0.0);
    grid.bV_.assign(J + 1, 0.0);
    for (std::size_t i = 0; i <= J; ++i) {
        const double V = vol(i);
        if (i < J)
            grid.aV_[i] = std::pow(face(i), n - 1) / ((r[i + 1] - r[i]) * V);
        if (i > 0)
            grid.bV_[i] = std::pow(face(i - 1), n - 1) / ((r[i] - r[i - 1]) * V);
    }
    return grid;
}

InitialDataReport make_initial_data(const RadialGrid& grid, const std::string& kind,
                                    const std::map<std::string, double>& params,
                                    const NonlinearityFamily& fam, bool check_monotone_time) {
    auto get = [&](const std::string& key, double fallback,
                   bool required = false) -> double {
        auto it = params.find(key);
        if (it == params.end()) {
            if (required)
                throw std::invalid_argument("make_initial_data: missing parameter '" + key +
                                            "' for kind '" + kind + "'");
            return fallback;
        }
        return it->second;
    };
    const double a = get("a", 0.0, true);
    if (!(a >= 0.0)) throw std::invalid_argument("make_initial_data: amplitude a must be >= 0");

    const auto& r = grid.nodes();
    const std::size_t J = grid.J();
    InitialDataReport rep;
    rep.u.resize(J + 1);

    if (kind == "bump") {
        const double m = get("m", 1.0);
        if (!(m > 0.0)) throw std::invalid_argument("make_initial_data: bump exponent m must be > 0");
        for (std::size_t i = 0; i <= J; ++i) {
            const double q = 1.0 - (r[i] / grid.R()) * (r[i] / grid.R());
            rep.u[i] = a * std::pow(std::max(q, 0.0), m);
        }
    } else if (kind == "plateau") {
        const double p = get("p", 0.5);
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("make_initial_data: plateau fraction p must be in (0,1)");
        const double rp = p * grid.R();
        for (std::size_t i = 0; i <= J; ++i) {
            if (r[i] <= rp)
                rep.u[i] = a;
            else
                rep.u[i] = 0.5 * a * (1.0 + std::cos(M_PI * (r[i] - rp) / (grid.R() - rp)));
        }
    } else if (kind == "constant") {
        std::fill(rep.u.begin(), rep.u.end(), a);
    } else {
        throw std::invalid_argument("make_initial_data: unknown kind '" + kind + "'");
    }

    rep.monotone_time_requested = check_monotone_time;
    if (check_monotone_time) {
        // sufficient condition for u_t >= 0: discrete Laplacian(u0) + f(u0) >= 0
        const auto& aV = grid.flux_over_volume_up();
        const auto& bV = grid.flux_over_volume_down();
        rep.monotone_time_pass = true;
        rep.worst_value = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < J; ++i) {
            const double up = (i < J) ? aV[i] * (rep.u[i + 1] - rep.u[i]) : 0.0;
            const double down = (i > 0) ? bV[i] * (rep.u[i] - rep.u[i - 1]) : 0.0;
            const double val = up - down + fam.f(rep.u[i]);
            if (val < rep.worst_value) {
                rep.worst_value = val;
                rep.worst_radius = r[i];
            }
            if (val < 0.0) rep.monotone_time_pass = false;
        }
    }
    return rep;
}

namespace {

/// Advance v by time tau under v' = f(v) with classical RK4 substeps sized so
/// each moves at most z_sub in the stiffness unit 1/f'.
double reaction_advance(double v, const NonlinearityFamily& fam, double tau, double z_sub,
                        long& budget, long step_index) {
    double remaining = tau;
    for (;;) {
        const double slope = std::abs(fam.f_slope(v));
        double dt = z_sub / std::max(slope, 1e-12);
        const bool last = dt >= remaining;
        if (last) dt = remaining;
        const double k1 = fam.f(v);
        const double k2 = fam.f(v + 0.5 * dt * k1);
        const double k3 = fam.f(v + 0.5 * dt * k2);
        const double k4 = fam.f(v + dt * k3);
        v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!std::isfinite(v)) instability(step_index, "non-finite value in reaction substep");
        if (--budget < 0) instability(step_index, "reaction substep budget exhausted");
        if (last) break;
        remaining -= dt;
    }
    return v;
}

void apply_reaction(RadialState& state, const NonlinearityFamily& fam, const SolverOptions& opt,
                    double tau) {
    const std::size_t J = state.grid->J();
    const bool pin_boundary = state.grid->bc() == BoundaryKind::dirichlet;
    long budget = 4'000'000;
    const std::size_t last = pin_boundary ? J - 1 : J;
    for (std::size_t i = 0; i <= last; ++i)
        state.u[i] = reaction_advance(state.u[i], fam, tau, opt.z_sub, budget, state.steps);
}

/// One backward-Euler solve of (I - tau * Laplacian) u_new = u.
void apply_diffusion(RadialState& state, double tau) {
    const RadialGrid& grid = *state.grid;
    const std::size_t J = grid.J();
    const auto& aV = grid.flux_over_volume_up();
    const auto& bV = grid.flux_over_volume_down();
    const bool dirichlet = grid.bc() == BoundaryKind::dirichlet;
    const std::size_t m = dirichlet ? J : J + 1; // unknowns 0..m-1

    std::vector<double> diag(m), upper(m), rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
        diag[i] = 1.0 + tau * (aV[i] + bV[i]);
        upper[i] = -tau * aV[i];
        rhs[i] = state.u[i];
        // Dirichlet: the u_J = 0 neighbour contributes nothing to the RHS.
    }
    // Thomas forward sweep (lower entry of row i is -tau * bV[i])
    for (std::size_t i = 1; i < m; ++i) {
        const double w = -tau * bV[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    state.u[m - 1] = rhs[m - 1] / diag[m - 1];
    for (std::size_t i = m - 1; i-- > 0;)
        state.u[i] = (rhs[i] - upper[i] * state.u[i + 1]) / diag[i];
    if (dirichlet) state.u[J] = 0.0;
}

void check_state(const RadialState& state, const SolverOptions& opt) {
    const std::size_t J = state.grid->J();
    const double scale = std::max(1.0, state.u[0]);
    for (std::size_t i = 0; i <= J; ++i) {
        if (!std::isfinite(state.u[i])) {
            std::ostringstream os;
            os << "non-finite value at node " << i;
            instability(state.steps, os.str());
        }
        if (i > 0 && state.u[i] > state.u[i - 1] + opt.monotone_tol * scale) {
            std::ostringstream os;
            os << "radial monotonicity violated between nodes " << i - 1 << " and " << i
               << " (excess " << state.u[i] - state.u[i - 1] << ")";
            instability(state.steps, os.str());
        }
    }
}

double choose_dt(const RadialState& state, const NonlinearityFamily& fam,
                 const SolverOptions& opt) {
    if (opt.dt_fixed > 0.0) return opt.dt_fixed;
    if (opt.reaction_off) return opt.dt_max;
    const double slope = std::abs(fam.f_slope(state.u[0]));
    return std::min(opt.dt_max, opt.safety / std::max(slope, 1e-12));
}

} // namespace

void step(RadialState& state, const NonlinearityFamily& fam, const SolverOptions& opt) {
    if (!state.grid) throw std::invalid_argument("step: state has no grid");
    if (state.u.size() != state.grid->J() + 1)
        throw std::invalid_argument("step: state size does not match grid");

    const double dt = choose_dt(state, fam, opt);
    if (dt < kDtFloor) {
        std::ostringstream os;
        os << "dt underflow (" << dt << ") at step " << state.steps
           << ": blow-up resolution exhausted";
        throw ResolutionExhausted(os.str());
    }

    const bool react = !opt.reaction_off;
    const bool diffuse = !opt.diffusion_off;
    if (react && diffuse) {
        apply_reaction(state, fam, opt, 0.5 * dt);
        apply_diffusion(state, dt);
        apply_reaction(state, fam, opt, 0.5 * dt);
    } else if (react) {
        apply_reaction(state, fam, opt, dt);
    } else if (diffuse) {
        apply_diffusion(state, dt);
    }

    kahan_add(state.t, state.t_comp, dt);
    state.dt_last = dt;
    ++state.steps;
    check_state(state, opt);
}

RunResult run_to_cap(RadialState state, const NonlinearityFamily& fam,
                     const ResolventTable& table, const SolverOptions& opt, double u_cap) {
    if (!state.grid) throw std::invalid_argument("run_to_cap: state has no grid");
    const double floor = table.domain_floor();
    if (!(state.u[0] > floor + 0.1))
        throw std::invalid_argument(
            "run_to_cap: initial center value too close to the family domain floor");

    RunResult run;
    run.grid = state.grid;

    const double G0 = table.G(state.u[0]);
    const double T_rough = state.t + G0;
    if (u_cap <= 0.0) u_cap = table.G_inv(1e-10 * T_rough);
    run.u_cap = u_cap;

    // level ladder in G-space, 8 per decade, for the T fit
    const double level_step = std::pow(10.0, -0.125);
    double next_level = G0 * level_step;
    std::vector<double> lvl_t, lvl_u, lvl_G;

    // snapshot ladder at G = e^{-k}; the 1e-9 slack keeps a start sitting
    // exactly on a level (e.g. bump a=4, G(4) = e^{-4}) in the ladder
    int next_snap = 4;
    while (std::exp(-next_snap) >= G0 * (1.0 + 1e-9)) ++next_snap;

    auto record = [&](double Gc) {
        run.traj_t.push_back(state.t);
        run.traj_u0.push_back(state.u[0]);
        run.traj_dt.push_back(state.dt_last);
        run.traj_T_running.push_back(state.t + Gc);
        if (!std::isfinite(Gc)) return;  // center dipped below the G domain; ladders wait
        while (Gc <= next_level) {
            lvl_t.push_back(state.t);
            lvl_u.push_back(state.u[0]);
            lvl_G.push_back(Gc);
            next_level *= level_step;
        }
        while (Gc <= std::exp(-next_snap) * (1.0 + 1e-9)) {
            run.snapshots.push_back({state.t, next_snap, state.u});
            ++next_snap;
        }
    };

    record(G0);
    try {
        while (state.u[0] < u_cap) {
            if (state.steps >= opt.max_steps) {
                run.status = RunStatus::step_limit;
                break;
            }
            step(state, fam, opt);
            const double g = (state.u[0] > floor)
                                 ? table.G(state.u[0])
                                 : std::numeric_limits<double>::quiet_NaN();
            record(g);
        }
    } catch (const ResolutionExhausted&) {
        run.status = RunStatus::resolution_exhausted;
    }
    run.t_end = state.t;
    run.steps = state.steps;

    // constant fit of T = t + G(u(0,t)) over the last decade of levels
    BlowupEstimate est;
    if (lvl_G.size() >= 2) {
        const double G_last = lvl_G.back();
        double sum = 0.0;
        std::size_t count = 0, first = lvl_G.size();
        for (std::size_t i = 0; i < lvl_G.size(); ++i) {
            if (lvl_G[i] <= 10.0 * G_last) {
                if (first == lvl_G.size()) first = i;
                sum += lvl_t[i] + lvl_G[i];
                ++count;
            }
        }
        est.T_est = sum / static_cast<double>(count);
        for (std::size_t i = first; i < lvl_G.size(); ++i) {
            est.ci = std::max(est.ci, std::abs(lvl_t[i] + lvl_G[i] - est.T_est));
            est.samples.emplace_back(lvl_t[i], lvl_u[i]);
        }
        est.low_confidence = est.ci > 1e-3 * (est.T_est - lvl_t[first]);
    } else {
        est.T_est = state.t + table.G(std::min(state.u[0], u_cap));
        est.ci = std::numeric_limits<double>::infinity();
        est.low_confidence = true;
    }
    run.estimate = std::move(est);
    return run;
}

std::vector<double> radial_derivative(const RadialGrid& grid, const std::vector<double>& u) {
    const auto& r = grid.nodes();
    const std::size_t J = grid.J();
    std::vector<double> d(J + 1);
    d[0] = (u[1] - u[0]) / (r[1] - r[0]);
    d[J] = (u[J] - u[J - 1]) / (r[J] - r[J - 1]);
    for (std::size_t i = 1; i < J; ++i) {
        const double hm = r[i] - r[i - 1], hp = r[i + 1] - r[i];
        d[i] = (hm * hm * u[i + 1] + (hp * hp - hm * hm) * u[i] - hp * hp * u[i - 1]) /
               (hm * hp * (hm + hp));
    }
    return d;
}

DiagnosticsReport diagnostics(const RunResult& run, const ResolventTable& table) {
    DiagnosticsReport rep;
    const double T = run.estimate.T_est;
    const double theta_end = std::max(T - run.t_end, 1e-300);

    // (a) type-I residual over the last two decades of T_est - t
    double early = -std::numeric_limits<double>::infinity();
    double late = early;
    std::size_t in_window = 0;
    for (std::size_t i = 0; i < run.traj_t.size(); ++i)
        if (T - run.traj_t[i] <= 100.0 * theta_end) ++in_window;
    const std::size_t stride = std::max<std::size_t>(1, in_window / 400);
    std::size_t seen = 0;
    for (std::size_t i = 0; i < run.traj_t.size(); ++i) {
        const double theta = T - run.traj_t[i];
        if (theta > 100.0 * theta_end || theta <= 0.0) continue;
        if (seen++ % stride != 0) continue;
        const double resid = run.traj_u0[i] - table.G_inv(theta);
        if (theta > 10.0 * theta_end)
            early = std::max(early, resid);
        else
            late = std::max(late, resid);
    }
    rep.type_I_early_max = early;
    rep.type_I_late_max = late;
    rep.type_I_sup = std::max(early, late);
    rep.type_I_bounded = late <= std::max(early * 1.05, early + 1e-6);

    // (b) scaled gradient per snapshot
    for (const auto& snap : run.snapshots) {
        const double theta = T - snap.t;
        if (theta <= 0.0) continue;
        const auto ur = radial_derivative(*run.grid, snap.u);
        double sup = 0.0;
        for (double v : ur) sup = std::max(sup, std::abs(v));
        rep.grad_scaled.push_back(sup * std::sqrt(theta));
    }
    if (rep.grad_scaled.size() >= 2) {
        const std::size_t half = rep.grad_scaled.size() / 2;
        double early_max = 0.0, late_max = 0.0;
        for (std::size_t i = 0; i < rep.grad_scaled.size(); ++i)
            (i < half ? early_max : late_max) =
                std::max(i < half ? early_max : late_max, rep.grad_scaled[i]);
        rep.grad_bounded = late_max <= 1.5 * early_max + 1e-6;
    } else {
        rep.grad_bounded = !rep.grad_scaled.empty();
    }

    // (c) gradient lower bound: smallest A with -u_r >= r f(u)/(2(A + log f))
    const auto& fam = table.family();
    double A_needed = 0.0;
    bool any = false;
    for (const auto& snap : run.snapshots) {
        const auto ur = radial_derivative(*run.grid, snap.u);
        const auto& r = run.grid->nodes();
        for (std::size_t i = 1; i < ur.size(); ++i) {
            if (snap.u[i] < rep.region_floor) break; // radially nonincreasing
            if (-ur[i] <= 1e-14) continue;
            const double logf = fam.log_f(snap.u[i]);
            const double need = r[i] * fam.f(snap.u[i]) / (2.0 * (-ur[i])) - logf;
            A_needed = std::max(A_needed, need);
            any = true;
        }
    }
    rep.A_hat = any ? A_needed : 0.0;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& snap : run.snapshots) {
        const auto ur = radial_derivative(*run.grid, snap.u);
        const auto& r = run.grid->nodes();
        for (std::size_t i = 1; i < ur.size(); ++i) {
            if (snap.u[i] < rep.region_floor) break;
            if (-ur[i] <= 1e-14) continue;
            const double f = fam.f(snap.u[i]);
            min_ratio = std::min(min_ratio,
                                 -ur[i] * 2.0 * (rep.A_hat + fam.log_f(snap.u[i])) / (r[i] * f));
        }
    }
    rep.grad_lower_min_ratio = std::isfinite(min_ratio) ? min_ratio : 0.0;
    return rep;
}

} // namespace blowlab
