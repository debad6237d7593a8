#pragma once

// Independently coded reference values for the test suite.  Everything here
// is deliberately implemented by a different route than the library under
// test: continued fractions instead of adaptive quadrature, closed forms
// instead of root finding.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracles {

/// Exponential integral E1(x) = int_x^inf e^-t / t dt for x > 0.
/// Series for small x, modified-Lentz continued fraction for x >= 1.
inline double expint_E1(double x) {
    if (!(x > 0.0)) throw std::domain_error("expint_E1: x must be positive");
    if (x < 1.0) {
        // E1(x) = -gamma - log x + sum_{k>=1} (-1)^{k+1} x^k / (k * k!)
        const double euler_gamma = 0.57721566490153286060651209008240;
        double sum = 0.0, term = 1.0;
        for (int k = 1; k <= 40; ++k) {
            term *= -x / k;
            sum -= term / k;
            if (std::abs(term / k) < 1e-18) break;
        }
        return -euler_gamma - std::log(x) + sum;
    }
    // e^x E1(x) = 1/(x+1- 1^2/(x+3- 2^2/(x+5- ...)))
    const double tiny = 1e-300;
    double b = x + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int k = 1; k <= 200; ++k) {
        const double a = -static_cast<double>(k) * k;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const double delta = c * d;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x);
}

/// Upper incomplete gamma Gamma(-1, x) = int_x^inf t^-2 e^-t dt, via the
/// recurrence Gamma(0,x) = E1(x), Gamma(a+1,x) = a Gamma(a,x) + x^a e^-x.
inline double upper_gamma_minus1(double x) { return std::exp(-x) / x - expint_E1(x); }

/// One-dimensional heat kernel evolution of Gaussian data
/// u0(x) = exp(-x^2 / (4 tau0)):  u(x,t) = sqrt(tau0/(tau0+t)) exp(-x^2/(4(tau0+t))).
inline double heat_gaussian(double tau0, double x, double t) {
    return std::sqrt(tau0 / (tau0 + t)) * std::exp(-x * x / (4.0 * (tau0 + t)));
}

/// Centered first difference.
template <class F>
double diff_central(F&& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace oracles
