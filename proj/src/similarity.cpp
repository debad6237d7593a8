#include "blowlab/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "blowlab/interp.hpp"
#include "blowlab/quadrature.hpp"

namespace blowlab {

namespace {

constexpr double kTruncationRadius = 12.0;

/// Surface measure of the unit sphere in R^n: 2 pi^{n/2} / Gamma(n/2).
double sphere_area(int n) {
    return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

void require_increasing_s(const std::vector<SimilarityFrame>& frames, std::size_t minimum,
                          const char* who) {
    if (frames.size() < minimum) {
        std::ostringstream os;
        os << who << ": needs at least " << minimum << " frames, got " << frames.size();
        throw std::invalid_argument(os.str());
    }
    for (std::size_t k = 1; k < frames.size(); ++k)
        if (!(frames[k].s > frames[k - 1].s))
            throw std::invalid_argument(std::string(who) + ": frames must have increasing s");
}

/// int_0^inf y^{n-1} e^{-y^2/8} dy = 8^{n/2} Gamma(n/2) / 2.
double tail_constant(int n) {
    return 0.5 * std::pow(8.0, 0.5 * n) * std::tgamma(0.5 * n);
}

} // namespace

SimilarityFrame to_frame(const RadialGrid& grid, const Snapshot& snap, double T_est,
                         const OdeSolution& ode) {
    if (snap.u.size() != grid.nodes().size())
        throw std::invalid_argument("to_frame: snapshot does not match the grid");
    const double theta = T_est - snap.t;
    if (!(theta > 0.0)) throw std::invalid_argument("to_frame: snapshot time is not before T_est");
    const double root = std::sqrt(theta);

    const auto& r = grid.nodes();
    std::size_t inside = 0;
    while (inside < r.size() && r[inside] <= root) ++inside;
    if (inside < 8) {
        std::ostringstream os;
        os << "to_frame: under-resolved frame at s = " << -std::log(theta) << ": only " << inside
           << " nodes inside y <= 1; the grid needs node spacing <= " << root / 8.0
           << " near the origin (about " << std::ceil(8.0 * grid.R() / root)
           << " uniform intervals)";
        throw std::invalid_argument(os.str());
    }

    SimilarityFrame frame;
    frame.s = -std::log(theta);
    frame.T_est = T_est;
    frame.n = grid.n();
    frame.psi1 = ode.psi1(frame.s);
    frame.y_max = std::min(grid.R() / root, kTruncationRadius);

    const auto ur = radial_derivative(grid, snap.u);
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double y = r[i] / root;
        frame.y.push_back(y);
        frame.w.push_back(snap.u[i] - frame.psi1);
        frame.w_y.push_back(root * ur[i]);
        if (y > kTruncationRadius) break; // keep one node past the cap
    }
    return frame;
}

namespace {

double radial_integral(const SimilarityFrame& frame, const std::vector<double>& values,
                       const std::function<double(double, double)>& density) {
    PchipInterpolant interp(frame.y, values);
    const double y_top = std::min(frame.y_max, interp.x_back());
    const double omega = sphere_area(frame.n);
    const int n = frame.n;
    const auto integrand = [&](double y) {
        return density(interp(y), y) * std::exp(-0.25 * y * y) * omega *
               std::pow(y, n - 1);
    };
    const auto res = integrate_adaptive(integrand, 0.0, y_top, 1e-10, 1e-15);
    return res.value;
}

} // namespace

double weighted_norm(const SimilarityFrame& frame, WeightedNorm which, double* tail_bound) {
    if (frame.y.size() < 2) throw std::invalid_argument("weighted_norm: empty frame");
    const auto square = [](double v, double) { return v * v; };
    double total = radial_integral(frame, frame.w, square);
    double bound_sup = frame.psi1 + std::abs(frame.w.front());
    if (which == WeightedNorm::H1rho) {
        total += radial_integral(frame, frame.w_y, square);
        double wy_sup = 0.0;
        for (double v : frame.w_y) wy_sup = std::max(wy_sup, std::abs(v));
        bound_sup += wy_sup;
    }
    if (tail_bound) {
        *tail_bound = bound_sup * bound_sup * sphere_area(frame.n) *
                      std::exp(-frame.y_max * frame.y_max / 8.0) * tail_constant(frame.n);
    }
    return total;
}

EnergyPoint energy(const SimilarityFrame& frame, const NonlinearityFamily& fam, double C1) {
    if (frame.y.size() < 2) throw std::invalid_argument("energy: empty frame");
    PchipInterpolant w_interp(frame.y, frame.w);
    PchipInterpolant wy_interp(frame.y, frame.w_y);
    const double y_top = std::min(frame.y_max, w_interp.x_back());
    const double omega = sphere_area(frame.n);
    const int n = frame.n;
    const auto integrand = [&](double y) {
        const double w = w_interp(y);
        const double wy = wy_interp(y);
        // w - e^w = -1 - (expm1(w) - w), exact near w = 0
        const double potential = -1.0 - (std::expm1(w) - w);
        return (0.5 * wy * wy + potential) * std::exp(-0.25 * y * y) * omega *
               std::pow(y, n - 1);
    };
    EnergyPoint pt;
    pt.E = integrate_adaptive(integrand, 0.0, y_top, 1e-10, 1e-15).value;
    const double gamma = fam.certified_alpha() - 0.5;
    pt.curlyE = pt.E + C1 * std::pow(frame.s, -gamma);
    return pt;
}

EnergyTrace build_energy_trace(const std::vector<SimilarityFrame>& frames,
                               const NonlinearityFamily& fam) {
    require_increasing_s(frames, 2, "build_energy_trace");
    EnergyTrace trace;
    trace.gamma = fam.certified_alpha() - 0.5;
    for (const auto& fr : frames) {
        trace.s_values.push_back(fr.s);
        trace.E_values.push_back(energy(fr, fam, 0.0).E);
        trace.L2rho.push_back(weighted_norm(fr, WeightedNorm::L2rho));
        trace.H1rho.push_back(weighted_norm(fr, WeightedNorm::H1rho));
    }

    for (double C1 : {1.0, 10.0, 100.0, 1000.0}) {
        trace.C1 = C1;
        trace.curlyE_values.clear();
        for (std::size_t k = 0; k < frames.size(); ++k)
            trace.curlyE_values.push_back(trace.E_values[k] +
                                          C1 * std::pow(frames[k].s, -trace.gamma));
        trace.monotone_pass = true;
        for (std::size_t k = 1; k < frames.size(); ++k) {
            const double prev = trace.curlyE_values[k - 1];
            if (trace.curlyE_values[k] > prev + 1e-3 * std::abs(prev)) {
                trace.monotone_pass = false;
                break;
            }
        }
        if (trace.monotone_pass) break;
    }
    trace.min_curlyE = *std::min_element(trace.curlyE_values.begin(), trace.curlyE_values.end());
    return trace;
}

DefectReport defect_decay(const std::vector<SimilarityFrame>& frames,
                          const NonlinearityFamily& fam, const OdeSolution& ode) {
    require_increasing_s(frames, 4, "defect_decay");
    DefectReport rep;
    const double alpha = fam.certified_alpha();
    bool finite = true;
    for (const auto& fr : frames) {
        const double h = ode.h(fr.s);
        const double m0 = fam.logL(fr.psi1);
        double worst = 0.0;
        for (std::size_t i = 0; i < fr.y.size(); ++i) {
            if (fr.y[i] > 4.0) break;
            const double w = fr.w[i];
            const double ew = std::exp(w);
            const double ratio_m1 = std::expm1(fam.logL(fr.psi1 + w) - m0);
            const double H = (h - 1.0) * std::expm1(w) + h * ew * ratio_m1;
            worst = std::max(worst, std::abs(H));
        }
        rep.s_values.push_back(fr.s);
        rep.max_H.push_back(worst);
        rep.scaled.push_back(worst * std::pow(fr.s, alpha) / std::log(fr.s));
        if (!std::isfinite(worst)) finite = false;
    }
    const std::size_t half = rep.scaled.size() / 2;
    double early = 0.0, late = 0.0;
    for (std::size_t k = 0; k < rep.scaled.size(); ++k)
        (k < half ? early : late) = std::max(k < half ? early : late, rep.scaled[k]);
    rep.pass = finite && late <= 1.05 * early + 1e-12;
    return rep;
}

LowerDecayReport lower_decay(const std::vector<SimilarityFrame>& frames) {
    require_increasing_s(frames, 2, "lower_decay");
    LowerDecayReport rep;
    for (const auto& fr : frames) {
        rep.s_values.push_back(fr.s);
        rep.values.push_back(std::sqrt(weighted_norm(fr, WeightedNorm::L2rho)) * fr.s);
    }
    const double top = *std::max_element(rep.values.begin(), rep.values.end());
    double late_min = top;
    for (std::size_t k = rep.values.size() / 2; k < rep.values.size(); ++k)
        late_min = std::min(late_min, rep.values[k]);
    rep.bounded_away = top > 0.0 && late_min >= 0.05 * top;
    return rep;
}

} // namespace blowlab
