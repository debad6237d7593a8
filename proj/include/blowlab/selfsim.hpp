#pragma once

#include <limits>
#include <string>
#include <vector>

namespace blowlab {

/// Classification of a backward self-similar profile shot for
///   z'' + ((n-1)/r - r/2) z' + e^z - 1 = 0,   z(0) = a,  z'(0) = 0.
/// member_of_S needs z' bounded, z' <= 0 on [0, r_max] and z(0) >= 0.
enum class ShotClass {
    member_of_S,
    derivative_unbounded, ///< |z_r| exceeded the bound before r_max
    increasing_somewhere, ///< z_r went positive before r_max
    escaped               ///< step failure / non-finite values (diagnostics in note)
};

const char* to_string(ShotClass c);

struct ProfileShot {
    int n = 1;
    double a = 0.0;     ///< center value z(0)
    double r_max = 40.0;
    std::vector<double> r, z, z_r; ///< samples, r ascending from 0
    ShotClass classification = ShotClass::escaped;
    double r_stop = 0.0; ///< where integration ended (r_max when it got there)
    /// Far-field constant of a certified member (NaN for plain shots).
    double far_C = std::numeric_limits<double>::quiet_NaN();
    std::string note;    ///< diagnostics for escaped shots
};

struct ShootOptions {
    double r_max = 40.0;   ///< integration horizon, >= 20
    double tol = 1e-10;    ///< local error per unit r (step-doubling control)
    double dr_out = 0.01;  ///< output sample spacing
    double z_r_pos = 1e-8; ///< tolerance band for "z_r <= 0"
    double z_r_cap = 1e3;  ///< bound for "z_r bounded"
    /// Inward certification runs stop once |z| leaves this band; the sign of z
    /// there already decides the side of the origin defect.
    double z_band = 20.0;
};

/// Integrate outward from the origin (series start at eps = 1e-6, where
/// regularity forces z''(0) = -(e^a - 1)/n) and classify.  The Gaussian
/// drift makes the far field exponentially unstable, so nontrivial members
/// are reachable only as classification boundaries, never as completed
/// outward runs; see certify_member.
ProfileShot shoot(int n, double a, const ShootOptions& opt = {});

/// g(r) = 1 + r z_r / 2; g >= 0 everywhere forces the trivial profile, so a
/// nontrivial member must take g negative somewhere.
struct SignConstraintReport {
    double g0 = 1.0;   ///< g at r = 0, exactly 1
    double min_g = 1.0;
    double argmin_r = 0.0;
    bool changes_sign = false;
};
SignConstraintReport check_sign_constraint(const ProfileShot& shot);

/// Certify a member by integrating inward from r_max with the far-field
/// series z = -2 log r + C + kappa/r^2 + kappa2/r^4 (kappa = 2n - 4 - e^C,
/// kappa2 = -kappa (8 - 2n + e^C)/2), bisecting C on the sign of the origin
/// defect mu = r^{n-1} z_r at r_in = 0.01 (the regular part is subtracted).
/// Inward, the e^{r^2/4} mode decays, so this direction is stable.
struct MemberCertificate {
    ProfileShot shot;   ///< composed profile on [0, r_max], member on success
    double C = 0.0;     ///< far-field constant at the bisection limit
    double a_star = 0.0;///< center value of the certified profile
    double mu = 0.0;    ///< residual origin defect after bisection
    /// Sup of the centered-FD residual of the profile ODE over samples with
    /// r >= 1 (nearer the origin the raw residual is dominated by e^z-scaled
    /// truncation error of the stencil, not by solution quality).
    double ode_residual_sup = 0.0;
    bool is_member = false;
    bool nontrivial = false;
    std::string reason; ///< first membership condition that failed, if any
};
MemberCertificate certify_member(int n, double C_lo, double C_hi,
                                 const ShootOptions& opt = {});

/// Classify a coarse grid of center values, bisect every classification
/// transition down to a_tol, and try to certify a member behind each
/// transition (far-field constant estimated from the near-boundary shot).
struct ScanTransition {
    double a_lo = 0.0, a_hi = 0.0;
    ShotClass lo_class = ShotClass::escaped, hi_class = ShotClass::escaped;
};
struct ScanResult {
    std::vector<double> a_values;
    std::vector<ShotClass> classes;
    std::vector<ScanTransition> transitions;
    std::vector<MemberCertificate> members; ///< certified nontrivial members
};
ScanResult scan(int n, double a_lo, double a_hi, int coarse = 40, double a_tol = 1e-10,
                const ShootOptions& opt = {});

/// The exact backward self-similar solution u(x,t) = phi(|x|/sqrt(T-t)) -
/// log(T-t) built on a certified nontrivial member (3 <= n <= 9).  phi uses
/// the origin series below the first sample, cubic Hermite interpolation of
/// (z, z_r) between samples, and the far-field series beyond r_max.
double counterexample_solution(const ProfileShot& shot, double T, double x_abs, double t);

/// Its final-time profile lim_{t->T} u(x,t) = -2 log|x| + C: same -2 log|x|
/// growth as the resolvent prediction but a constant in place of the
/// log(4|log x^2|) term, so the two final profiles never merge.
double counterexample_final_profile(const ProfileShot& shot, double x_abs);

/// Centered finite-difference residual of u_t - Laplacian(u) - e^u at (x,t),
/// an oracle-style check that the counterexample really solves the PDE.
double counterexample_fd_residual(const ProfileShot& shot, double T, double x_abs, double t,
                                  double dx = 0.02, double dt = 0.01);

} // namespace blowlab
