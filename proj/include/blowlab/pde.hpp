#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "blowlab/resolvent.hpp"

namespace blowlab {

enum class BoundaryKind { dirichlet, truncated_free };

/// Radial mesh on [0, R], graded toward the origin: spacings grow outward by
/// a fixed factor <= 1.2, so the blow-up core |x| ~ sqrt(T-t) stays resolved
/// while the outer region is coarse.
class RadialGrid {
  public:
    /// Build a grid of J intervals whose largest/smallest spacing ratio is
    /// `sigma` >= 1 (sigma = 1 gives a uniform mesh).  Throws if the implied
    /// adjacent-spacing growth exceeds 1.2.
    static RadialGrid graded(int n, double R, std::size_t J, double sigma, BoundaryKind bc);

    int n() const { return n_; }
    double R() const { return R_; }
    BoundaryKind bc() const { return bc_; }
    std::size_t J() const { return nodes_.size() - 1; }
    const std::vector<double>& nodes() const { return nodes_; }
    double h_min() const { return h_min_; }
    double h_max() const { return h_max_; }

    /// Finite-volume coefficients: Laplacian row i reads
    ///   (Lu)_i = [a_i (u_{i+1}-u_i) - b_i (u_i-u_{i-1})] / V_i
    /// with face areas a_i = r_{i+1/2}^{n-1}/h_{i+1/2} (b likewise) and exact
    /// cell volumes V_i = (r_{i+1/2}^n - r_{i-1/2}^n)/n.  At the origin this
    /// reduces to 2n (u_1 - u_0)/h_0^2.
    const std::vector<double>& flux_over_volume_up() const { return aV_; }   // a_i / V_i
    const std::vector<double>& flux_over_volume_down() const { return bV_; } // b_i / V_i

  private:
    RadialGrid() = default;
    int n_ = 1;
    double R_ = 1.0;
    BoundaryKind bc_ = BoundaryKind::dirichlet;
    std::vector<double> nodes_;
    std::vector<double> aV_, bV_;
    double h_min_ = 0.0, h_max_ = 0.0;
};

/// Mutable solver state: nodal values of u on a shared grid.
struct RadialState {
    std::shared_ptr<const RadialGrid> grid;
    std::vector<double> u;
    double t = 0.0;
    double t_comp = 0.0; ///< Kahan compensation for the time accumulator
    double dt_last = 0.0;
    long steps = 0;
};

struct SolverOptions {
    double safety = 0.05;      ///< dt <= safety / f'(u(0,t))
    double dt_max = 1e-2;      ///< cap on dt while the reaction is mild
    double dt_fixed = 0.0;     ///< > 0 forces a constant dt (oracle tests)
    double z_sub = 0.02;       ///< reaction substep target dt_sub * f'(u)
    bool reaction_off = false;
    bool diffusion_off = false;
    double monotone_tol = 1e-10; ///< allowed radial-monotonicity slack
    long max_steps = 2'000'000;
};

/// Thrown when dt < 1e-16: the blow-up can no longer be resolved in double
/// precision; the run so far remains valid.
class ResolutionExhausted : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Thrown on NaN/Inf or a radial-monotonicity violation, naming the step.
class InstabilityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct InitialDataReport {
    std::vector<double> u;
    bool monotone_time_requested = false;
    bool monotone_time_pass = false; ///< discrete Laplacian(u0) + f(u0) >= 0 everywhere
    double worst_value = 0.0;        ///< most negative Laplacian(u0)+f(u0) found
    double worst_radius = 0.0;
};

/// Radially nonincreasing initial data.
///   bump:     a * (1 - (r/R)^2)_+^m          (params a, m)
///   plateau:  a on [0, p*R], cosine taper to 0 at R   (params a, p in (0,1))
///   constant: a everywhere
/// With check_monotone_time set, also verifies the sufficient condition
/// Laplacian(u0) + f(u0) >= 0 for u_t >= 0 and reports the result (a failure
/// is informative, not fatal).
InitialDataReport make_initial_data(const RadialGrid& grid, const std::string& kind,
                                    const std::map<std::string, double>& params,
                                    const NonlinearityFamily& fam,
                                    bool check_monotone_time = false);

/// One time step: Strang split (half reaction, implicit diffusion, half
/// reaction).  The reaction is advanced per node by classical RK4 substeps
/// sized so each substep moves by at most z_sub in units of 1/f'; diffusion
/// is one backward-Euler solve of the finite-volume radial Laplacian.
void step(RadialState& state, const NonlinearityFamily& fam, const SolverOptions& opt);

struct Snapshot {
    double t = 0.0;
    int level = 0; ///< snapshot taken when G(u(0,t)) first dropped below e^{-level}
    std::vector<double> u;
};

struct BlowupEstimate {
    double T_est = 0.0;
    double ci = 0.0; ///< half-width: max |t_k + G(u_k) - T_est| over the fit window
    std::vector<std::pair<double, double>> samples; ///< (t, u(0,t)) at the fitted levels
    std::string method = "level_fit";
    bool low_confidence = false;
};

enum class RunStatus { completed, resolution_exhausted, step_limit };

struct RunResult {
    std::shared_ptr<const RadialGrid> grid;
    std::vector<double> traj_t, traj_u0, traj_dt, traj_T_running;
    std::vector<Snapshot> snapshots;
    BlowupEstimate estimate;
    RunStatus status = RunStatus::completed;
    double u_cap = 0.0;
    double t_end = 0.0;
    long steps = 0;
};

/// Advance until u(0,t) >= u_cap (u_cap <= 0 selects the per-family default
/// G_inv(1e-10 * T_rough)).  Records the full center trajectory, snapshot
/// profiles each time G(u(0,t)) crosses e^{-k} (k = 4,5,...), and the
/// blow-up time estimate from the level fit of t + G(u(0,t)).
RunResult run_to_cap(RadialState state, const NonlinearityFamily& fam,
                     const ResolventTable& table, const SolverOptions& opt, double u_cap = 0.0);

struct DiagnosticsReport {
    /// (a) type-I residual u(0,t) - G_inv(T_est - t) over the trajectory
    double type_I_sup = 0.0;       ///< sup over the last two decades of T_est - t
    double type_I_early_max = 0.0; ///< max over the earlier of the two decades
    double type_I_late_max = 0.0;  ///< max over the final decade
    bool type_I_bounded = false;   ///< late max shows no growth over early max
    /// (b) scaled gradient sup |u_r| * sqrt(T_est - t) per snapshot
    std::vector<double> grad_scaled;
    bool grad_bounded = false;
    /// (c) smallest A making -u_r >= r f(u) / (2 (A + log f(u))) hold on
    /// the region {u >= region_floor, r > 0} across late snapshots
    double A_hat = 0.0;
    double region_floor = 5.0;
    double grad_lower_min_ratio = 0.0; ///< min of -u_r 2(A_hat+log f)/(r f) with A_hat
};

DiagnosticsReport diagnostics(const RunResult& run, const ResolventTable& table);

/// Second-order radial derivative on the (nonuniform) grid: three-point
/// weighted central differences inside, one-sided at the ends.
std::vector<double> radial_derivative(const RadialGrid& grid, const std::vector<double>& u);

} // namespace blowlab
