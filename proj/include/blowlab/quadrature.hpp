#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace blowlab {

/// Result of an adaptive quadrature over a finite interval.
struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0; ///< accumulated error estimate
    int evaluations = 0;
    bool converged = false;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1,1] (positive half; symmetric).
inline constexpr double kGK15Nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kGK15WeightsK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGK15WeightsG[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelEstimate {
    double a, b, value, error;
};

template <class F>
PanelEstimate gk15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    // center point (Kronrod index 7, Gauss index 3)
    const double fc = f(c);
    resk += kGK15WeightsK[7] * fc;
    resg += kGK15WeightsG[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double x = h * kGK15Nodes[j];
        const double fsum = f(c - x) + f(c + x);
        resk += kGK15WeightsK[j] * fsum;
        if (j % 2 == 1) resg += kGK15WeightsG[j / 2] * fsum;
    }
    const double value = resk * h;
    const double err = std::abs((resk - resg) * h);
    return {a, b, value, err};
}

} // namespace detail

/// Adaptive Gauss-Kronrod (7,15) integration of f over [a,b].
/// Worst-interval bisection until the summed error estimate meets
/// max(abs_tol, rel_tol*|integral|) or the interval budget is exhausted.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-12,
                                    double abs_tol = 0.0, int max_intervals = 4000) {
    QuadratureResult out;
    if (!(b > a)) {
        out.converged = true;
        return out;
    }
    std::vector<detail::PanelEstimate> heap;
    auto cmp = [](const detail::PanelEstimate& p, const detail::PanelEstimate& q) {
        return p.error < q.error;
    };
    heap.push_back(detail::gk15(f, a, b));
    out.evaluations = 15;
    double total = heap.front().value;
    double total_err = heap.front().error;
    int panels = 1;
    while (panels < max_intervals) {
        const double goal = std::max(abs_tol, rel_tol * std::abs(total));
        if (total_err <= goal) break;
        std::pop_heap(heap.begin(), heap.end(), cmp);
        const detail::PanelEstimate worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) { // interval at rounding limit
            heap.push_back(worst);
            std::push_heap(heap.begin(), heap.end(), cmp);
            break;
        }
        auto left = detail::gk15(f, worst.a, mid);
        auto right = detail::gk15(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end(), cmp);
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end(), cmp);
        ++panels;
    }
    // Re-sum from panels for a numerically tidy total.
    double value = 0.0, err = 0.0;
    for (const auto& p : heap) {
        value += p.value;
        err += p.error;
    }
    out.value = value;
    out.abs_error = err;
    out.converged = err <= std::max(abs_tol, rel_tol * std::abs(value)) * 1.0000001 ||
                    err <= std::abs(value) * 1e-15;
    return out;
}

} // namespace blowlab
