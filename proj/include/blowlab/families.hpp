#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace blowlab {

/// A slowly varying factor L in the reaction term f(s) = e^s * L(e^s).
///
/// Everything is evaluated through the log argument x = log X: the PDE pushes
/// X = e^{u} far beyond double range long before the run ends, while x stays
/// modest.  Each builtin supplies closed-form
///     m(x)  = log L(e^x),   m1(x) = d m/dx,   m2(x) = d^2 m/dx^2,
/// from which direct-argument values follow:
///     L(X)  = exp(m(log X))
///     L'(X) = L/X * m1,  L''(X) = L/X^2 * (m1^2 + m2 - m1)
///     theta(X) = X L'(X)/L(X) = m1(log X).
class NonlinearityFamily {
  public:
    using ScalarFn = std::function<double(double)>;

    NonlinearityFamily(std::string name, std::map<std::string, double> params, ScalarFn m,
                       ScalarFn m1, ScalarFn m2, ScalarFn l_sum_at_log, double s_pos,
                       double certified_alpha);

    const std::string& name() const { return name_; }
    const std::map<std::string, double>& params() const { return params_; }

    /// log L(e^x) and log-argument derivatives.
    double logL(double x) const { return m_(x); }
    double dlogL(double x) const { return m1_(x); }
    double d2logL(double x) const { return m2_(x); }

    /// Direct-argument evaluation (use only when X fits in double range).
    double L(double X) const;
    double L1(double X) const; ///< dL/dX
    double L2(double X) const; ///< d2L/dX2
    double L_at_log(double x) const;

    /// theta(X) = X L'(X) / L(X), the relative variation rate.
    double theta(double X) const;
    double theta_at_log(double x) const { return m1_(x); }

    /// Reaction term f(s) = e^s L(e^s) and friends (s is the solution value).
    double f(double s) const;
    double log_f(double s) const { return s + m_(s); }
    /// f'(s), computed through the per-family closed form of L + X L'
    /// (the generic product f*(1+m1) is 0*inf at roots of L).
    double f_slope(double s) const;

    /// L(X) > 0 is certified for X >= s_pos.
    double s_pos() const { return s_pos_; }
    /// Smallest s for which f(s) > 0 and f is increasing on [s, inf).
    double domain_floor() const { return domain_floor_; }
    /// f is increasing on [monotone_from, inf) (numerically certified).
    double monotone_from() const { return monotone_from_; }
    /// A slow-variation exponent alpha > 1/2 this family satisfies.
    double certified_alpha() const { return certified_alpha_; }

  private:
    std::string name_;
    std::map<std::string, double> params_;
    ScalarFn m_, m1_, m2_, l_sum_at_log_;
    double s_pos_;
    double certified_alpha_;
    double domain_floor_ = 0.0;
    double monotone_from_ = 0.0;
};

/// Construct a builtin family by name.  Throws std::invalid_argument for an
/// unknown name or parameters outside the admissible range, naming the
/// offending field.
///
/// Builtins (parameters in parentheses):
///   pure_exp                              L(X) = 1
///   power_log (q, K)                      L(X) = (log X + K)^q
///   log_power (q, K)                      L(X) = (log(log X + K))^q
///   exp_shift (nu, sign)                  L(X) = exp(sign*(1+log X)^nu)
///   oscillating_sin_log                   L(X) = (1+log X)^{sin(log(1+log X))}
///   oscillating_cos_power (nu, gamma)     L(X) = exp((1+log X)^nu * cos((1+log X)^gamma))
///   amplitude_sin (nu, a)                 L(X) = 1 + a*sin((1+log X)^nu)
NonlinearityFamily make_builtin(const std::string& name,
                                const std::map<std::string, double>& params = {});

std::vector<std::string> builtin_names();

/// Report of the slow-variation certification on a log-argument grid.
/// ratio1[i] = |theta(X_i)| * (log X_i)^alpha   (should tend to 0)
/// ratio2[i] = |theta'(X_i)| * X_i * log X_i    (should tend to 0)
/// The verdict compares windowed maxima over the last half of the grid, so
/// oscillating factors are judged by their decay envelope rather than by
/// pointwise monotonicity.
struct SlowVariationReport {
    double alpha = 0.0;
    std::vector<double> log_grid;
    std::vector<double> ratio1;
    std::vector<double> ratio2;
    bool ratio1_pass = false;
    bool ratio2_pass = false;
    bool pass = false;
};

/// Certify the slow-variation hypothesis for a given alpha on a grid of
/// log-arguments x = log X (increasing, x_min >= log(s_pos), spanning at
/// least six decades of X).
SlowVariationReport certify_slow_variation(const NonlinearityFamily& fam, double alpha,
                                           std::span<const double> log_grid);

/// Report of the uniform-ratio certification: for each grid point x = log s,
/// worst[i] = max over lambda in the admissible window
///            of |L(lambda*s)/L(s) - 1| * (log s)^alpha / (4|log lambda|).
/// The window is log(lambda) in [-(log s)^alpha / 8, +(log s)^alpha / 8].
struct UniformRatioReport {
    double alpha = 0.0;
    std::vector<double> log_grid;
    std::vector<double> worst;
    std::size_t pass_from = 0; ///< first index from which all entries pass
    bool pass = false;
};

UniformRatioReport certify_uniform_ratio(const NonlinearityFamily& fam, double alpha,
                                         std::span<const double> log_grid);

} // namespace blowlab
