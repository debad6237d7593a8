#include "blowlab/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace blowlab {

namespace {

void require_table(const ProfilePrediction& pred, const char* who) {
    if (!pred.table) throw std::invalid_argument(std::string(who) + ": prediction has no table");
}

/// |x|^2 / (4 |log |x|^2|), the parabolic-with-log length scale of the
/// profile formulas; increasing on (0, e^{-1/2}) which covers |x| <= 0.3.
double log_scale(double x_abs) {
    return x_abs * x_abs / (4.0 * std::abs(std::log(x_abs * x_abs)));
}

void check_radius(const ProfilePrediction& pred, double x_abs, const char* who) {
    if (!(x_abs >= 0.0) || x_abs > pred.validity_radius) {
        std::ostringstream os;
        os << who << ": |x| = " << x_abs << " outside the validity range [0, "
           << pred.validity_radius << "]";
        throw std::invalid_argument(os.str());
    }
}

/// Nonincreasing within 1% jitter between consecutive entries.
bool trend_down(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > 1.01 * v[k - 1] + 1e-12) return false;
    return !v.empty() && v.back() < v.front();
}

} // namespace

double global_profile(const ProfilePrediction& pred, double x_abs, double t) {
    require_table(pred, "global_profile");
    check_radius(pred, x_abs, "global_profile");
    if (!(t <= pred.T)) throw std::invalid_argument("global_profile: t is past T");
    const double theta = pred.T - t;
    if (x_abs == 0.0) {
        if (theta == 0.0)
            throw std::invalid_argument("global_profile: (x, t) = (0, T) is the singularity");
        return pred.table->G_inv(theta);
    }
    return pred.table->G_inv(theta + log_scale(x_abs));
}

double final_profile(const ProfilePrediction& pred, double x_abs) {
    require_table(pred, "final_profile");
    if (!(x_abs > 0.0)) throw std::invalid_argument("final_profile: need |x| > 0");
    return global_profile(pred, x_abs, pred.T);
}

double refined_profile(const ProfilePrediction& pred, double xi_abs, double t) {
    require_table(pred, "refined_profile");
    if (!(xi_abs >= 0.0) || xi_abs > pred.xi_max)
        throw std::invalid_argument("refined_profile: |xi| outside validity");
    if (!(t < pred.T)) throw std::invalid_argument("refined_profile: need t < T");
    const double theta = pred.T - t;
    return pred.table->G_inv(theta * (1.0 + 0.25 * xi_abs * xi_abs));
}

double second_order(const ProfilePrediction& pred, double y_abs, double t) {
    require_table(pred, "second_order");
    if (!(t < pred.T)) throw std::invalid_argument("second_order: need t < T");
    const double theta = pred.T - t;
    return pred.table->G_inv(theta) +
           (2.0 * pred.n - y_abs * y_abs) / (4.0 * std::abs(std::log(theta)));
}

ProfileComparison compare(const ProfilePrediction& pred,
                          const std::vector<SimilarityFrame>& frames) {
    require_table(pred, "compare");
    if (frames.size() < 2) throw std::invalid_argument("compare: needs at least 2 frames");
    ProfileComparison out;
    std::vector<double> global_gaps, refined_gaps, second_devs;

    for (const auto& fr : frames) {
        if (fr.n != pred.n) throw std::invalid_argument("compare: dimension mismatch");
        if (std::abs(fr.T_est - pred.T) > 1e-9 * std::max(1.0, std::abs(pred.T)))
            throw std::invalid_argument("compare: frame T_est does not match the prediction");
        if (!out.points.empty() && !(fr.s > out.points.back().s))
            throw std::invalid_argument("compare: frames must have increasing s");

        ProfileCheckpoint pt;
        pt.s = fr.s;
        pt.theta = std::exp(-fr.s);
        const double t = pred.T - pt.theta;
        const double root = std::sqrt(pt.theta);
        const double psi = fr.psi1;

        // global annulus 2 theta <= x^2 <= rho^2
        {
            std::size_t first = 0, last = 0;
            for (std::size_t i = 0; i < fr.y.size(); ++i) {
                const double x = fr.y[i] * root;
                if (x * x < 2.0 * pt.theta) first = i + 1;
                if (x <= pred.validity_radius) last = i;
            }
            if (last > first) {
                const std::size_t stride = std::max<std::size_t>(1, (last - first) / 64);
                for (std::size_t i = first; i <= last; i += stride) {
                    const double x = fr.y[i] * root;
                    const double gap = std::abs(psi + fr.w[i] - global_profile(pred, x, t));
                    pt.global_sup_gap = std::max(pt.global_sup_gap, gap);
                }
            }
        }
        // refined region |xi| <= xi_max, xi = y / sqrt(s)
        {
            const double xi_scale = 1.0 / std::sqrt(fr.s);
            std::size_t last = 0;
            for (std::size_t i = 0; i < fr.y.size(); ++i)
                if (fr.y[i] * xi_scale <= pred.xi_max) last = i;
            const std::size_t stride = std::max<std::size_t>(1, last / 64);
            for (std::size_t i = 0; i <= last; i += stride) {
                const double gap =
                    std::abs(psi + fr.w[i] - refined_profile(pred, fr.y[i] * xi_scale, t));
                pt.refined_sup_gap = std::max(pt.refined_sup_gap, gap);
            }
        }
        // second-order region y <= 3: (u - psi) 4|log theta| vs 2n - y^2
        {
            pt.second_at_center = fr.w.front() * 4.0 * fr.s;
            for (std::size_t i = 0; i < fr.y.size() && fr.y[i] <= 3.0; ++i) {
                const double rescaled = fr.w[i] * 4.0 * fr.s;
                const double target = 2.0 * pred.n - fr.y[i] * fr.y[i];
                pt.second_sup_dev = std::max(pt.second_sup_dev, std::abs(rescaled - target));
            }
        }
        out.points.push_back(pt);
        global_gaps.push_back(pt.global_sup_gap);
        refined_gaps.push_back(pt.refined_sup_gap);
        second_devs.push_back(std::abs(pt.second_at_center - 2.0 * pred.n));
    }

    out.global_improving = trend_down(global_gaps);
    out.refined_improving = trend_down(refined_gaps);
    out.second_toward_2n = trend_down(second_devs);
    return out;
}

FinalProfileReport compare_final(const ProfilePrediction& pred, const RadialGrid& grid,
                                 const std::vector<double>& u_final) {
    require_table(pred, "compare_final");
    const auto& r = grid.nodes();
    if (u_final.size() != r.size())
        throw std::invalid_argument("compare_final: state does not match the grid");

    // Smallest resolved radius: first node whose local spacing is at most a
    // tenth of the radius, so the log profile changes little per cell there.
    std::size_t i1 = 0;
    for (std::size_t i = 1; i + 1 < r.size(); ++i) {
        if (r[i + 1] - r[i] <= 0.1 * r[i]) {
            i1 = i;
            break;
        }
    }
    if (i1 == 0)
        throw std::invalid_argument("compare_final: no resolved radius (grid too coarse)");
    const double r1 = r[i1];
    if (!(10.0 * r1 <= pred.validity_radius))
        throw std::invalid_argument(
            "compare_final: the decade above the smallest resolved radius leaves the validity "
            "range");

    FinalProfileReport rep;
    std::size_t prev = 0;
    for (int k = 0; k <= 7; ++k) { // node nearest each of r1 .. 10 r1
        const double target = r1 * std::pow(10.0, k / 7.0);
        auto it = std::lower_bound(r.begin() + static_cast<std::ptrdiff_t>(i1), r.end(), target);
        std::size_t i = static_cast<std::size_t>(it - r.begin());
        if (i >= r.size()) i = r.size() - 1;
        if (i > i1 && target - r[i - 1] < r[i] - target) --i;
        if (!rep.x.empty() && i == prev) continue;
        prev = i;
        rep.x.push_back(r[i]);
        rep.rel_gap.push_back(std::abs(u_final[i] / final_profile(pred, r[i]) - 1.0));
    }
    rep.gap_decreasing_in_x = trend_down(rep.rel_gap);
    return rep;
}

} // namespace blowlab
