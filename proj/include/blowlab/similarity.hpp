#pragma once

#include <vector>

#include "blowlab/families.hpp"
#include "blowlab/pde.hpp"
#include "blowlab/resolvent.hpp"

namespace blowlab {

/// One trajectory snapshot rewritten in similarity variables:
///   s = -log(T_est - t),   y = r / sqrt(T_est - t),
///   w(y, s) = u(y sqrt(T_est - t), t) - psi1(s).
/// Nodes are kept up to y_max = min(R / sqrt(T_est - t), 12); one extra node
/// past the cap (when the grid has one) guards interpolation at the cut.
struct SimilarityFrame {
    double s = 0.0;
    double T_est = 0.0;
    int n = 1;
    double psi1 = 0.0;        ///< flat-solution value subtracted from u
    std::vector<double> y;    ///< rescaled radii, increasing from 0
    std::vector<double> w;    ///< u - psi1 at the y nodes
    std::vector<double> w_y;  ///< sqrt(T_est - t) * u_r (finite differences)
    double y_max = 0.0;
};

/// Rescale one snapshot.  Requires snap.t < T_est and at least 8 grid nodes
/// inside y <= 1; an under-resolved frame is rejected with the node spacing
/// the grid would need.
SimilarityFrame to_frame(const RadialGrid& grid, const Snapshot& snap, double T_est,
                         const OdeSolution& ode);

enum class WeightedNorm { L2rho, H1rho };

/// Squared weighted norm  int w^2 rho dmu  (H1rho adds  int w_y^2 rho dmu)
/// with rho = e^{-y^2/4} and dmu = omega_{n-1} y^{n-1} dy over the truncated
/// radial range [0, y_max].  If tail_bound is given it receives an explicit
/// bound ( <= e^{-y_max^2/8} * constant ) on the neglected tail, using
/// |w| <= psi1 + |w(0)| (u lies between 0 and its center value).
double weighted_norm(const SimilarityFrame& frame, WeightedNorm which,
                     double* tail_bound = nullptr);

struct EnergyPoint {
    double E = 0.0;      ///< int (1/2 w_y^2 + w - e^w) rho dmu
    double curlyE = 0.0; ///< E + C1 s^{-gamma}, gamma = alpha - 1/2
};

EnergyPoint energy(const SimilarityFrame& frame, const NonlinearityFamily& fam, double C1);

struct EnergyTrace {
    std::vector<double> s_values, E_values, curlyE_values;
    std::vector<double> L2rho, H1rho; ///< squared norms per frame (exported)
    double gamma = 0.0;
    double C1 = 0.0;              ///< smallest ladder value that passes
    bool monotone_pass = false;   ///< curlyE nonincreasing within 1e-3 |curlyE|
    double min_curlyE = 0.0;      ///< reported lower bound over the trace
};

/// Evaluate the energy along a frame sequence (increasing s).  C1 starts at 1
/// and escalates by x10 up to 1000 until the perturbed energy is nonincreasing
/// within 1e-3 |curlyE|; the smallest passing C1 is kept (the largest tried,
/// with monotone_pass = false, when none passes).
EnergyTrace build_energy_trace(const std::vector<SimilarityFrame>& frames,
                               const NonlinearityFamily& fam);

struct DefectReport {
    std::vector<double> s_values;
    std::vector<double> max_H;  ///< max |H(s,y)| over the nodes with y <= 4
    std::vector<double> scaled; ///< max_H * s^alpha / log s
    bool pass = false;          ///< all finite, late max not above early max
};

/// Nonautonomous defect of the rescaled equation,
///   H(s,y) = (h(s)-1)(e^w - 1) + h(s) e^w (L(e^{psi1+w})/L(e^{psi1}) - 1),
/// evaluated through log arguments (the L ratio as expm1 of a logL gap).
/// Needs at least 4 frames at increasing s.
DefectReport defect_decay(const std::vector<SimilarityFrame>& frames,
                          const NonlinearityFamily& fam, const OdeSolution& ode);

struct LowerDecayReport {
    std::vector<double> s_values;
    std::vector<double> values; ///< ||w||_{L2rho} * s
    bool bounded_away = false;  ///< late values stay clear of 0
};

/// Lower-decay diagnostic: the linearization of the rescaled flow is w itself,
/// and its L2rho norm should decay no faster than 1/s on blow-up runs.
LowerDecayReport lower_decay(const std::vector<SimilarityFrame>& frames);

} // namespace blowlab
