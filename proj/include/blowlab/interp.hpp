#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace blowlab {

/// Monotone cubic Hermite interpolant (Fritsch-Carlson slope limiting).
///
/// Where the data are monotone the interpolant is monotone too, so
/// interpolated radial profiles keep the nonincreasing property their
/// invariants rely on.  Evaluation outside [x_front, x_back] throws.
class PchipInterpolant {
  public:
    PchipInterpolant() = default;

    PchipInterpolant(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t m = x_.size();
        if (m < 2 || y_.size() != m)
            throw std::invalid_argument("PchipInterpolant: need >= 2 matching nodes");
        for (std::size_t i = 1; i < m; ++i)
            if (!(x_[i] > x_[i - 1]))
                throw std::invalid_argument("PchipInterpolant: abscissae must increase");
        d_.assign(m, 0.0);
        if (m == 2) {
            d_[0] = d_[1] = slope(0);
            return;
        }
        for (std::size_t i = 1; i + 1 < m; ++i) {
            const double dl = slope(i - 1), dr = slope(i);
            if (dl * dr <= 0.0) {
                d_[i] = 0.0;
            } else {
                const double hl = x_[i] - x_[i - 1], hr = x_[i + 1] - x_[i];
                const double wl = 2.0 * hr + hl, wr = hr + 2.0 * hl;
                d_[i] = (wl + wr) / (wl / dl + wr / dr);
            }
        }
        d_.front() = end_slope(x_[1] - x_[0], x_[2] - x_[1], slope(0), slope(1));
        d_.back() = end_slope(x_[m - 1] - x_[m - 2], x_[m - 2] - x_[m - 3], slope(m - 2),
                              slope(m - 3));
    }

    double operator()(double x) const { return eval(x).first; }
    double derivative(double x) const { return eval(x).second; }

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }

  private:
    double slope(std::size_t i) const { return (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]); }

    // Three-point end slope, clipped so the first interval stays monotone.
    static double end_slope(double h0, double h1, double s0, double s1) {
        double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d * s0 <= 0.0) return 0.0;
        if (s0 * s1 < 0.0 && std::abs(d) > 3.0 * std::abs(s0)) return 3.0 * s0;
        return d;
    }

    std::pair<double, double> eval(double x) const {
        const double span = x_.back() - x_.front();
        if (x < x_.front() - 1e-12 * span || x > x_.back() + 1e-12 * span)
            throw std::out_of_range("PchipInterpolant: abscissa outside data range");
        x = std::clamp(x, x_.front(), x_.back());
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = (it == x_.begin()) ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        if (i + 1 >= x_.size()) i = x_.size() - 2;
        const double h = x_[i + 1] - x_[i];
        const double u = (x - x_[i]) / h;
        const double u2 = u * u, u3 = u2 * u;
        const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
        const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
        const double value =
            h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
        const double g00 = (6 * u2 - 6 * u) / h, g10 = 3 * u2 - 4 * u + 1;
        const double g01 = (6 * u - 6 * u2) / h, g11 = 3 * u2 - 2 * u;
        const double deriv = g00 * y_[i] + g10 * d_[i] + g01 * y_[i + 1] + g11 * d_[i + 1];
        return {value, deriv};
    }

    std::vector<double> x_, y_, d_;
};

} // namespace blowlab
