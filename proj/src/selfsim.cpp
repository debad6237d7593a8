#include "blowlab/selfsim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace blowlab {

namespace {

constexpr double kSeriesStart = 1e-6; ///< series handoff radius at the origin
constexpr double kInnerRadius = 0.01; ///< inner end of inward certification runs

struct State {
    double z = 0.0;
    double w = 0.0; ///< z_r
};

/// z'' = (r/2 - (n-1)/r) z' - (e^z - 1).
State rhs(int n, double r, const State& s) {
    State d;
    d.z = s.w;
    d.w = (0.5 * r - (n - 1) / r) * s.w - std::expm1(s.z);
    return d;
}

State rk4_step(int n, double r, const State& s, double h) {
    const State k1 = rhs(n, r, s);
    const State s2{s.z + 0.5 * h * k1.z, s.w + 0.5 * h * k1.w};
    const State k2 = rhs(n, r + 0.5 * h, s2);
    const State s3{s.z + 0.5 * h * k2.z, s.w + 0.5 * h * k2.w};
    const State k3 = rhs(n, r + 0.5 * h, s3);
    const State s4{s.z + h * k3.z, s.w + h * k3.w};
    const State k4 = rhs(n, r + h, s4);
    return State{s.z + h / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
                 s.w + h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w)};
}

enum class StopReason { reached_end, derivative_cap, increasing, step_failure, range_guard };

struct Trace {
    std::vector<double> r, z, w;
    double r_stop = 0.0;
    State at_stop;
    StopReason reason = StopReason::reached_end;
    std::string note;
};

struct IntegrateControl {
    double tol = 1e-10;      ///< local error per unit r
    double h_max = 0.25;
    double z_r_pos = 1e-8;   ///< increasing event (disabled when <= 0 is not wanted)
    double z_r_cap = 1e3;    ///< derivative bound event
    bool watch_increase = true;
    double z_guard = 100.0;  ///< |z| beyond this stops the run (range_guard)
    double dr_out = 0.0;     ///< > 0: record samples at multiples of dr_out
};

/// Adaptive RK4 (step doubling) from r0 to r1, either direction.  Events are
/// checked at accepted steps; samples land on exact multiples of dr_out.
Trace integrate(int n, double r0, const State& s0, double r1, const IntegrateControl& ctl) {
    Trace tr;
    const double dir = r1 > r0 ? 1.0 : -1.0;
    double r = r0;
    State s = s0;
    double h = std::min(ctl.h_max, 1e-3);
    // First output multiple of dr_out strictly past r0 in the travel direction.
    double next_out = 0.0;
    if (ctl.dr_out > 0.0) {
        const double k = dir > 0 ? std::ceil(r0 / ctl.dr_out + 1e-9)
                                 : std::floor(r0 / ctl.dr_out - 1e-9);
        next_out = k * ctl.dr_out;
    }
    auto record = [&](double rr, const State& ss) {
        tr.r.push_back(rr);
        tr.z.push_back(ss.z);
        tr.w.push_back(ss.w);
    };
    while ((r1 - r) * dir > 1e-14 * std::max(1.0, std::abs(r1))) {
        double step = std::min(h, ctl.h_max);
        step = std::min(step, std::abs(r1 - r));
        bool hit_out = false;
        if (ctl.dr_out > 0.0) {
            // Treat a target within (or a hair past, after rounding) the current
            // step as a landing; the sample snaps to the exact multiple either
            // way, so a stranded target can never silently stop the recording.
            const double dist = (next_out - r) * dir;
            if (dist <= step * (1.0 + 1e-9) + 1e-12 * std::max(1.0, std::abs(r))) {
                step = std::max(dist, 0.0);
                hit_out = true;
            }
        }
        const double hs = dir * step;
        const State big = rk4_step(n, r, s, hs);
        const State half1 = rk4_step(n, r, s, 0.5 * hs);
        const State half2 = rk4_step(n, r + 0.5 * hs, half1, 0.5 * hs);
        const double err =
            std::max(std::abs(half2.z - big.z), std::abs(half2.w - big.w)) / 15.0;
        // Roundoff floor: the step-doubling estimate cannot resolve errors below
        // the arithmetic noise of the state, so never demand that much.
        const double allowed =
            ctl.tol * step + 1e-14 * (std::abs(s.z) + std::abs(s.w) + 1.0);
        if (!std::isfinite(half2.z) || !std::isfinite(half2.w)) {
            tr.reason = StopReason::step_failure;
            std::ostringstream os;
            os << "non-finite state near r = " << r;
            tr.note = os.str();
            break;
        }
        if (err > allowed && step > 1e-13 * std::max(1.0, std::abs(r))) {
            h = step * std::max(0.1, 0.9 * std::pow(allowed / err, 0.25));
            continue;
        }
        if (step <= 1e-13 * std::max(1.0, std::abs(r)) && err > allowed) {
            tr.reason = StopReason::step_failure;
            std::ostringstream os;
            os << "step size underflow at r = " << r;
            tr.note = os.str();
            break;
        }
        r += hs;
        s = half2;
        // Grow from the accepted step but never shrink below the working step
        // size: landings on output points cap `step` artificially and must not
        // drag the controller down with them.
        h = std::max(h, step * std::min(4.0, std::max(0.5, 0.9 * std::pow(allowed / std::max(err, 1e-300), 0.25))));
        if (hit_out && ctl.dr_out > 0.0) {
            r = next_out; // land exactly on the sample point
            record(r, s);
            next_out += dir * ctl.dr_out;
        }
        if (ctl.watch_increase && s.w > ctl.z_r_pos) {
            tr.reason = StopReason::increasing;
            break;
        }
        if (std::abs(s.w) > ctl.z_r_cap) {
            tr.reason = StopReason::derivative_cap;
            break;
        }
        if (std::abs(s.z) > ctl.z_guard) {
            tr.reason = StopReason::range_guard;
            break;
        }
    }
    tr.r_stop = r;
    tr.at_stop = s;
    return tr;
}

/// Origin series z = a - c2 r^2 + c4 r^4 forced by regularity (z'(0) = 0).
void origin_series(int n, double a, double r, double& z, double& w) {
    const double c2 = std::expm1(a) / (2.0 * n);
    const double c4 = c2 * std::expm1(a) / (4.0 * n + 8.0);
    z = a - c2 * r * r + c4 * r * r * r * r;
    w = -2.0 * c2 * r + 4.0 * c4 * r * r * r;
}

/// Far-field series z = -2 log r + C + kappa/r^2 + kappa2/r^4 with
/// kappa = 2n - 4 - e^C, kappa2 = -kappa (8 - 2n + e^C)/2.
void far_series(int n, double C, double r, double& z, double& w) {
    const double eC = std::exp(C);
    const double kappa = 2.0 * n - 4.0 - eC;
    const double kappa2 = -kappa * (8.0 - 2.0 * n + eC) / 2.0;
    const double r2 = r * r;
    z = -2.0 * std::log(r) + C + kappa / r2 + kappa2 / (r2 * r2);
    w = -2.0 / r - 2.0 * kappa / (r2 * r) - 4.0 * kappa2 / (r2 * r2 * r);
}

void require_shoot_args(int n, double a, const ShootOptions& opt, const char* who) {
    if (n < 1) throw std::invalid_argument(std::string(who) + ": dimension must be >= 1");
    if (!(a >= 0.0))
        throw std::invalid_argument(std::string(who) + ": center value must be >= 0");
    if (!(opt.r_max >= 20.0))
        throw std::invalid_argument(std::string(who) + ": r_max must be >= 20");
    if (!(opt.tol > 0.0) || !(opt.dr_out > 0.0))
        throw std::invalid_argument(std::string(who) + ": tolerances must be positive");
}

/// Origin defect of an inward run.  The singular mode near r = 0 (c/r^{n-2}
/// for n >= 3, c log r for n = 2, c r for n = 1) drives r^{n-1} z_r to a
/// negative multiple of c in every dimension.  A run that leaves the z band
/// has already shown the sign of c: an upward spike (e^z runaway) means
/// c > 0, i.e. a negative defect, and a dive means c < 0.  Only runs that
/// reach the inner radius inside the band get the genuine defect
/// mu = r^{n-1} (z_r - regular part), the fine dial near a member.
double origin_defect(int n, const Trace& tr) {
    if (tr.reason != StopReason::reached_end)
        return tr.at_stop.z > 0.0 ? -1.0 : 1.0;
    const double rn1 = std::pow(tr.r_stop, n - 1);
    const double regular = -std::expm1(tr.at_stop.z) * tr.r_stop / n;
    return rn1 * (tr.at_stop.w - regular);
}

Trace inward_run(int n, double C, const ShootOptions& opt, bool record) {
    double z = 0.0, w = 0.0;
    far_series(n, C, opt.r_max, z, w);
    IntegrateControl ctl;
    ctl.tol = opt.tol;
    ctl.h_max = record ? opt.dr_out : 0.25;
    ctl.watch_increase = false;  // inward runs ride z_r wherever it goes
    ctl.z_r_cap = 1e8;
    ctl.z_guard = opt.z_band;
    ctl.dr_out = record ? opt.dr_out : 0.0;
    return integrate(n, opt.r_max, State{z, w}, kInnerRadius, ctl);
}

/// Centered-FD residual of the profile ODE over uniformly spaced samples,
/// restricted to r >= 1 where the stencil resolves the profile.  Closer to
/// the origin the e^z curvature turns the raw residual into pure truncation
/// error (it scales like e^{z(0)} h^2); that region is already certified by
/// the origin-defect bisection and the convergent center-value series.
double ode_residual_sup(const ProfileShot& shot) {
    double sup = 0.0;
    for (std::size_t i = 1; i + 1 < shot.r.size(); ++i) {
        if (shot.r[i] < 1.0) continue;
        const double h1 = shot.r[i] - shot.r[i - 1];
        const double h2 = shot.r[i + 1] - shot.r[i];
        if (std::abs(h1 - h2) > 1e-9) continue; // only uniform interior stencils
        const double zpp = (shot.z[i + 1] - 2.0 * shot.z[i] + shot.z[i - 1]) / (h1 * h1);
        const double zp = (shot.z[i + 1] - shot.z[i - 1]) / (2.0 * h1);
        const double res = zpp + ((shot.n - 1) / shot.r[i] - 0.5 * shot.r[i]) * zp +
                           std::expm1(shot.z[i]);
        sup = std::max(sup, std::abs(res));
    }
    return sup;
}

void require_member(const ProfileShot& shot, const char* who) {
    if (shot.classification != ShotClass::member_of_S)
        throw std::invalid_argument(std::string(who) + ": shot is not a member of S");
    if (!(shot.a > 0.0))
        throw std::invalid_argument(std::string(who) + ": member is trivial");
    if (!std::isfinite(shot.far_C))
        throw std::invalid_argument(std::string(who) +
                                    ": member lacks a certified far-field constant");
    if (shot.n < 3 || shot.n > 9)
        throw std::invalid_argument(std::string(who) + ": dimension must lie in [3, 9]");
    if (shot.r.size() < 4)
        throw std::invalid_argument(std::string(who) + ": member has too few samples");
}

/// Cubic Hermite interpolation of the profile from (z, z_r) samples; origin
/// series below the first positive sample, far-field series past r_max.
double phi_eval(const ProfileShot& shot, double rho) {
    if (rho < 0.0) rho = -rho;
    const auto& r = shot.r;
    if (rho >= shot.r_max) {
        double z = 0.0, w = 0.0;
        far_series(shot.n, shot.far_C, rho, z, w);
        return z;
    }
    const std::size_t first = r.front() == 0.0 ? 1 : 0;
    if (rho <= r[first] && first == 1) {
        double z = 0.0, w = 0.0;
        origin_series(shot.n, shot.a, rho, z, w);
        return z;
    }
    auto it = std::upper_bound(r.begin(), r.end(), rho);
    std::size_t i = static_cast<std::size_t>(it - r.begin());
    if (i == 0) i = 1;
    if (i >= r.size()) i = r.size() - 1;
    const std::size_t j = i - 1;
    const double h = r[i] - r[j];
    const double u = (rho - r[j]) / h;
    const double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    const double h10 = u * (1.0 - u) * (1.0 - u);
    const double h01 = u * u * (3.0 - 2.0 * u);
    const double h11 = u * u * (u - 1.0);
    return h00 * shot.z[j] + h * h10 * shot.z_r[j] + h01 * shot.z[i] + h * h11 * shot.z_r[i];
}

} // namespace

const char* to_string(ShotClass c) {
    switch (c) {
    case ShotClass::member_of_S: return "member_of_S";
    case ShotClass::derivative_unbounded: return "derivative_unbounded";
    case ShotClass::increasing_somewhere: return "increasing_somewhere";
    case ShotClass::escaped: return "escaped";
    }
    return "escaped";
}

ProfileShot shoot(int n, double a, const ShootOptions& opt) {
    require_shoot_args(n, a, opt, "shoot");
    ProfileShot shot;
    shot.n = n;
    shot.a = a;
    shot.r_max = opt.r_max;
    shot.r.push_back(0.0);
    shot.z.push_back(a);
    shot.z_r.push_back(0.0);

    double z0 = 0.0, w0 = 0.0;
    origin_series(n, a, kSeriesStart, z0, w0);
    IntegrateControl ctl;
    ctl.tol = opt.tol;
    ctl.h_max = opt.dr_out;
    ctl.z_r_pos = opt.z_r_pos;
    ctl.z_r_cap = opt.z_r_cap;
    ctl.dr_out = opt.dr_out;
    // Diving solutions are classified by the derivative bound alone: once
    // z < -37, expm1(z) is exactly -1 and the equation turns linear, so a dive
    // always drives z_r through the cap.  The range guard cannot fire first
    // (|z| <= a + z_r_cap * r_max stays far below it); it only backstops
    // overflow if someone lifts the cap by orders of magnitude.
    ctl.z_guard = 1e6;
    const Trace tr = integrate(n, kSeriesStart, State{z0, w0}, opt.r_max, ctl);

    shot.r.insert(shot.r.end(), tr.r.begin(), tr.r.end());
    shot.z.insert(shot.z.end(), tr.z.begin(), tr.z.end());
    shot.z_r.insert(shot.z_r.end(), tr.w.begin(), tr.w.end());
    shot.r_stop = tr.r_stop;
    shot.note = tr.note;
    switch (tr.reason) {
    case StopReason::reached_end: shot.classification = ShotClass::member_of_S; break;
    case StopReason::increasing: shot.classification = ShotClass::increasing_somewhere; break;
    case StopReason::derivative_cap: shot.classification = ShotClass::derivative_unbounded; break;
    case StopReason::range_guard:
    case StopReason::step_failure:
        shot.classification = ShotClass::escaped;
        if (shot.note.empty()) {
            std::ostringstream os;
            os << "range guard tripped at r = " << tr.r_stop << " (z = " << tr.at_stop.z << ")";
            shot.note = os.str();
        }
        break;
    }
    return shot;
}

SignConstraintReport check_sign_constraint(const ProfileShot& shot) {
    if (shot.r.empty()) throw std::invalid_argument("check_sign_constraint: empty shot");
    SignConstraintReport rep;
    rep.g0 = 1.0; // r z_r / 2 vanishes at the origin identically
    rep.min_g = 1.0;
    rep.argmin_r = 0.0;
    for (std::size_t i = 0; i < shot.r.size(); ++i) {
        const double g = 1.0 + 0.5 * shot.r[i] * shot.z_r[i];
        if (g < rep.min_g) {
            rep.min_g = g;
            rep.argmin_r = shot.r[i];
        }
    }
    rep.changes_sign = rep.min_g < 0.0;
    return rep;
}

MemberCertificate certify_member(int n, double C_lo, double C_hi, const ShootOptions& opt) {
    if (n < 1) throw std::invalid_argument("certify_member: dimension must be >= 1");
    if (!(C_lo < C_hi))
        throw std::invalid_argument("certify_member: empty far-field bracket");
    if (!(opt.r_max >= 20.0))
        throw std::invalid_argument("certify_member: r_max must be >= 20");

    MemberCertificate cert;
    double mu_lo = origin_defect(n, inward_run(n, C_lo, opt, false));
    double mu_hi = origin_defect(n, inward_run(n, C_hi, opt, false));
    if (!(mu_lo * mu_hi < 0.0)) {
        cert.is_member = false;
        cert.reason = "origin defect does not change sign over the bracket";
        return cert;
    }
    double lo = C_lo, hi = C_hi;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double mu_mid = origin_defect(n, inward_run(n, mid, opt, false));
        if (mu_mid == 0.0) {
            lo = hi = mid;
            break;
        }
        if ((mu_mid < 0.0) == (mu_lo < 0.0)) {
            lo = mid;
            mu_lo = mu_mid;
        } else {
            hi = mid;
        }
    }
    cert.C = 0.5 * (lo + hi);

    const Trace tr = inward_run(n, cert.C, opt, true);
    cert.mu = origin_defect(n, tr);
    if (tr.reason != StopReason::reached_end) {
        cert.is_member = false;
        cert.reason = "inward run at the bisection limit did not reach the origin region";
        return cert;
    }
    if (static_cast<double>(tr.r.size()) + 5.0 < (opt.r_max - kInnerRadius) / opt.dr_out) {
        cert.is_member = false;
        cert.reason = "recorded inward run lost samples";
        return cert;
    }

    // Center value: z(r_in) = a - c2(a) r_in^2 + c4(a) r_in^4, solved by
    // fixed-point iteration (contraction factor ~ e^a r_in^2 / (2n), so large
    // center values converge slowly and need the full loop).
    double a_star = tr.at_stop.z;
    double shift = 1.0;
    for (int k = 0; k < 200 && std::abs(shift) > 1e-13; ++k) {
        double zs = 0.0, ws = 0.0;
        origin_series(n, a_star, kInnerRadius, zs, ws);
        shift = tr.at_stop.z - zs;
        a_star += shift;
    }
    if (std::abs(shift) > 1e-9) {
        cert.is_member = false;
        cert.reason = "center value extraction did not converge";
        return cert;
    }
    cert.a_star = a_star;

    ProfileShot& shot = cert.shot;
    shot.n = n;
    shot.a = a_star;
    shot.r_max = opt.r_max;
    shot.r_stop = opt.r_max;
    shot.far_C = cert.C;
    shot.r.push_back(0.0);
    shot.z.push_back(a_star);
    shot.z_r.push_back(0.0);
    for (std::size_t k = tr.r.size(); k-- > 0;) { // inward samples arrive descending
        shot.r.push_back(tr.r[k]);
        shot.z.push_back(tr.z[k]);
        shot.z_r.push_back(tr.w[k]);
    }

    double w_max = 0.0, w_pos = -1e300;
    for (double w : shot.z_r) {
        w_max = std::max(w_max, std::abs(w));
        w_pos = std::max(w_pos, w);
    }
    cert.ode_residual_sup = ode_residual_sup(shot);
    if (!(a_star >= 0.0)) {
        cert.reason = "center value is negative";
        shot.classification = ShotClass::escaped;
    } else if (w_pos > opt.z_r_pos) {
        cert.reason = "z_r goes positive";
        shot.classification = ShotClass::increasing_somewhere;
    } else if (w_max > opt.z_r_cap) {
        cert.reason = "z_r exceeds the bound";
        shot.classification = ShotClass::derivative_unbounded;
    } else {
        cert.is_member = true;
        shot.classification = ShotClass::member_of_S;
    }
    cert.nontrivial = cert.is_member && a_star > 1e-6;
    return cert;
}

ScanResult scan(int n, double a_lo, double a_hi, int coarse, double a_tol,
                const ShootOptions& opt) {
    if (!(a_lo >= 0.0) || !(a_hi > a_lo))
        throw std::invalid_argument("scan: need 0 <= a_lo < a_hi");
    if (coarse < 2) throw std::invalid_argument("scan: need at least 2 grid points");
    if (!(a_tol > 0.0)) throw std::invalid_argument("scan: a_tol must be positive");

    ScanResult out;
    const double da = (a_hi - a_lo) / coarse;
    for (int k = 1; k <= coarse; ++k) { // open at a_lo: (a_lo, a_hi]
        const double a = a_lo + k * da;
        out.a_values.push_back(a);
        out.classes.push_back(shoot(n, a, opt).classification);
    }

    for (std::size_t k = 1; k < out.a_values.size(); ++k) {
        if (out.classes[k] == out.classes[k - 1]) continue;
        double lo = out.a_values[k - 1], hi = out.a_values[k];
        const ShotClass lo_class = out.classes[k - 1];
        while (hi - lo > a_tol) {
            const double mid = 0.5 * (lo + hi);
            if (shoot(n, mid, opt).classification == lo_class)
                lo = mid;
            else
                hi = mid;
        }
        ScanTransition t;
        t.a_lo = lo;
        t.a_hi = hi;
        t.lo_class = lo_class;
        t.hi_class = shoot(n, hi, opt).classification;
        out.transitions.push_back(t);

        // Estimate the far-field constant from the near-boundary trajectory,
        // which tracks the separating profile until the unstable mode surfaces.
        const ProfileShot near = shoot(n, 0.5 * (lo + hi), opt);
        // Fit well inside the tracked range: by ~0.8 r_stop the unstable mode
        // already distorts the trajectory.
        const double r_fit = std::min(6.0, 0.65 * near.r_stop);
        if (r_fit < 3.5) continue; // boundary trajectory broke too early to fit
        std::size_t i_fit = 0;
        for (std::size_t i = 0; i < near.r.size(); ++i)
            if (near.r[i] <= r_fit) i_fit = i;
        double C_est = near.z[i_fit] + 2.0 * std::log(near.r[i_fit]);
        for (int pass = 0; pass < 2; ++pass) {
            double zs = 0.0, ws = 0.0;
            far_series(n, C_est, near.r[i_fit], zs, ws);
            C_est += near.z[i_fit] - zs;
        }
        for (double half : {0.4, 1.2}) {
            MemberCertificate cert = certify_member(n, C_est - half, C_est + half, opt);
            if (cert.reason == "origin defect does not change sign over the bracket") continue;
            if (cert.is_member && cert.nontrivial) {
                const bool dup =
                    std::any_of(out.members.begin(), out.members.end(),
                                [&](const MemberCertificate& m) {
                                    return std::abs(m.a_star - cert.a_star) < 1e-6;
                                });
                if (!dup) out.members.push_back(std::move(cert));
            }
            break;
        }
    }
    return out;
}

double counterexample_solution(const ProfileShot& shot, double T, double x_abs, double t) {
    require_member(shot, "counterexample_solution");
    if (!(t < T))
        throw std::invalid_argument("counterexample_solution: time must be before T");
    if (x_abs < 0.0) x_abs = -x_abs;
    const double theta = T - t;
    return phi_eval(shot, x_abs / std::sqrt(theta)) - std::log(theta);
}

double counterexample_final_profile(const ProfileShot& shot, double x_abs) {
    require_member(shot, "counterexample_final_profile");
    if (!(x_abs > 0.0))
        throw std::invalid_argument("counterexample_final_profile: need |x| > 0");
    return -2.0 * std::log(x_abs) + shot.far_C;
}

double counterexample_fd_residual(const ProfileShot& shot, double T, double x_abs, double t,
                                  double dx, double dt) {
    require_member(shot, "counterexample_fd_residual");
    if (!(dx > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("counterexample_fd_residual: steps must be positive");
    if (!(x_abs - dx > 0.0))
        throw std::invalid_argument("counterexample_fd_residual: stencil crosses the origin");
    if (!(t + dt < T))
        throw std::invalid_argument("counterexample_fd_residual: stencil crosses T");
    auto u = [&](double x, double tt) { return counterexample_solution(shot, T, x, tt); };
    const double u0 = u(x_abs, t);
    const double u_t = (u(x_abs, t + dt) - u(x_abs, t - dt)) / (2.0 * dt);
    const double u_xp = u(x_abs + dx, t);
    const double u_xm = u(x_abs - dx, t);
    const double u_rr = (u_xp - 2.0 * u0 + u_xm) / (dx * dx);
    const double u_r = (u_xp - u_xm) / (2.0 * dx);
    return u_t - (u_rr + (shot.n - 1) / x_abs * u_r) - std::exp(u0);
}

} // namespace blowlab
