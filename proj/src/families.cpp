#include "blowlab/families.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace blowlab {

namespace {

[[noreturn]] void bad_param(const std::string& family, const std::string& message) {
    throw std::invalid_argument("family '" + family + "': " + message);
}

double require(const std::map<std::string, double>& params, const std::string& family,
               const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) bad_param(family, "missing parameter '" + key + "'");
    return it->second;
}

void reject_unknown(const std::map<std::string, double>& params, const std::string& family,
                    std::initializer_list<const char*> known) {
    for (const auto& [k, v] : params) {
        (void)v;
        bool ok = false;
        for (const char* name : known)
            if (k == name) ok = true;
        if (!ok) bad_param(family, "unknown parameter '" + k + "'");
    }
}

// Numerically locate the smallest x0 >= lo such that 1 + m1(x) > margin on
// [x0, hi]; f' = f*(1+m1), so f is increasing beyond x0.
double find_monotone_from(const NonlinearityFamily::ScalarFn& m1, double lo, double hi) {
    const int samples = 4000;
    double last_bad = lo - 1.0;
    for (int i = 0; i <= samples; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / samples;
        if (1.0 + m1(x) <= 1e-9) last_bad = x;
    }
    if (last_bad < lo) return lo;
    return last_bad + (hi - lo) / samples;
}

} // namespace

NonlinearityFamily::NonlinearityFamily(std::string name, std::map<std::string, double> params,
                                       ScalarFn m, ScalarFn m1, ScalarFn m2,
                                       ScalarFn l_sum_at_log, double s_pos,
                                       double certified_alpha)
    : name_(std::move(name)),
      params_(std::move(params)),
      m_(std::move(m)),
      m1_(std::move(m1)),
      m2_(std::move(m2)),
      l_sum_at_log_(std::move(l_sum_at_log)),
      s_pos_(s_pos),
      certified_alpha_(certified_alpha) {
    const double lo = std::max(0.0, std::log(s_pos_));
    monotone_from_ = find_monotone_from(m1_, lo, 400.0);
    domain_floor_ = std::max(lo, monotone_from_);
}

double NonlinearityFamily::L(double X) const {
    if (!(X > 0.0)) throw std::domain_error("L: argument must be positive");
    return std::exp(m_(std::log(X)));
}

double NonlinearityFamily::L_at_log(double x) const { return std::exp(m_(x)); }

double NonlinearityFamily::L1(double X) const {
    if (!(X > 0.0)) throw std::domain_error("L1: argument must be positive");
    const double x = std::log(X);
    return std::exp(m_(x)) * m1_(x) / X;
}

double NonlinearityFamily::L2(double X) const {
    if (!(X > 0.0)) throw std::domain_error("L2: argument must be positive");
    const double x = std::log(X);
    const double m1 = m1_(x);
    return std::exp(m_(x)) * (m1 * m1 + m2_(x) - m1) / (X * X);
}

double NonlinearityFamily::theta(double X) const {
    if (!(X > 0.0)) throw std::domain_error("theta: argument must be positive");
    return m1_(std::log(X));
}

double NonlinearityFamily::f(double s) const { return std::exp(s + m_(s)); }

double NonlinearityFamily::f_slope(double s) const { return std::exp(s) * l_sum_at_log_(s); }

namespace {

NonlinearityFamily make_pure_exp(const std::map<std::string, double>& params) {
    reject_unknown(params, "pure_exp", {});
    auto zero = [](double) { return 0.0; };
    auto one = [](double) { return 1.0; };
    return {"pure_exp", {}, zero, zero, zero, one, 1.0, 0.9};
}

NonlinearityFamily make_power_log(const std::map<std::string, double>& params) {
    reject_unknown(params, "power_log", {"q", "K"});
    const double q = require(params, "power_log", "q");
    const double K = require(params, "power_log", "K");
    if (K < 0.0) bad_param("power_log", "K must be >= 0");
    if (K == 0.0 && q < 1.0) bad_param("power_log", "K = 0 requires q >= 1");
    auto m = [q, K](double x) { return q * std::log(x + K); };
    auto m1 = [q, K](double x) { return q / (x + K); };
    auto m2 = [q, K](double x) { return -q / ((x + K) * (x + K)); };
    // L + X L' at log-argument x: (x+K)^q + q (x+K)^(q-1), stable at x+K -> 0.
    auto lsum = [q, K](double x) {
        const double b = x + K;
        return std::pow(b, q) + q * std::pow(b, q - 1.0);
    };
    const double s_pos = std::max(1.0, std::exp(1.0 - K));
    return {"power_log", {{"q", q}, {"K", K}}, m, m1, m2, lsum, s_pos, 0.9};
}

NonlinearityFamily make_log_power(const std::map<std::string, double>& params) {
    reject_unknown(params, "log_power", {"q", "K"});
    const double q = require(params, "log_power", "q");
    const double K = require(params, "log_power", "K");
    if (K < 1.0) bad_param("log_power", "K must be >= 1");
    if (K == 1.0 && q < 1.0) bad_param("log_power", "K = 1 requires q >= 1");
    auto m = [q, K](double x) { return q * std::log(std::log(x + K)); };
    auto m1 = [q, K](double x) {
        const double b = x + K;
        return q / (b * std::log(b));
    };
    auto m2 = [q, K](double x) {
        const double b = x + K;
        const double lb = std::log(b);
        return -q * (lb + 1.0) / (b * b * lb * lb);
    };
    auto lsum = [q, K](double x) {
        const double b = x + K;
        const double lb = std::log(b);
        return std::pow(lb, q) + q * std::pow(lb, q - 1.0) / b;
    };
    const double s_pos = std::max(1.0, std::exp(2.0 - K));
    return {"log_power", {{"q", q}, {"K", K}}, m, m1, m2, lsum, s_pos, 0.9};
}

NonlinearityFamily make_exp_shift(const std::map<std::string, double>& params) {
    reject_unknown(params, "exp_shift", {"nu", "sign"});
    const double nu = require(params, "exp_shift", "nu");
    double sign = 1.0;
    if (auto it = params.find("sign"); it != params.end()) sign = it->second;
    if (!(nu > 0.0 && nu < 0.5)) bad_param("exp_shift", "nu must lie in (0, 1/2)");
    if (sign != 1.0 && sign != -1.0) bad_param("exp_shift", "sign must be +1 or -1");
    auto m = [nu, sign](double x) { return sign * std::pow(1.0 + x, nu); };
    auto m1 = [nu, sign](double x) { return sign * nu * std::pow(1.0 + x, nu - 1.0); };
    auto m2 = [nu, sign](double x) {
        return sign * nu * (nu - 1.0) * std::pow(1.0 + x, nu - 2.0);
    };
    auto lsum = [m, m1](double x) { return std::exp(m(x)) * (1.0 + m1(x)); };
    const double alpha = std::min(0.9, 0.5 + 0.475 * (0.5 - nu) * 2.0);
    return {"exp_shift", {{"nu", nu}, {"sign", sign}}, m, m1, m2, lsum, 1.0, alpha};
}

NonlinearityFamily make_oscillating_sin_log(const std::map<std::string, double>& params) {
    reject_unknown(params, "oscillating_sin_log", {});
    auto m = [](double x) {
        const double l = std::log(1.0 + x);
        return std::sin(l) * l;
    };
    auto m1 = [](double x) {
        const double l = std::log(1.0 + x);
        return (std::cos(l) * l + std::sin(l)) / (1.0 + x);
    };
    auto m2 = [](double x) {
        const double l = std::log(1.0 + x);
        const double b = 1.0 + x;
        return (2.0 * std::cos(l) - l * std::sin(l) - l * std::cos(l) - std::sin(l)) / (b * b);
    };
    auto lsum = [m, m1](double x) { return std::exp(m(x)) * (1.0 + m1(x)); };
    return {"oscillating_sin_log", {}, m, m1, m2, lsum, 1.0, 0.9};
}

NonlinearityFamily make_oscillating_cos_power(const std::map<std::string, double>& params) {
    reject_unknown(params, "oscillating_cos_power", {"nu", "gamma"});
    const double nu = require(params, "oscillating_cos_power", "nu");
    const double ga = require(params, "oscillating_cos_power", "gamma");
    if (!(nu > 0.0)) bad_param("oscillating_cos_power", "nu must be > 0");
    if (!(ga > 0.0)) bad_param("oscillating_cos_power", "gamma must be > 0");
    if (!(nu + ga < 0.5)) bad_param("oscillating_cos_power", "nu + gamma must be < 1/2");
    auto m = [nu, ga](double x) {
        const double b = 1.0 + x;
        return std::pow(b, nu) * std::cos(std::pow(b, ga));
    };
    auto m1 = [nu, ga](double x) {
        const double b = 1.0 + x;
        const double R = std::pow(b, ga);
        return nu * std::pow(b, nu - 1.0) * std::cos(R) -
               ga * std::pow(b, nu + ga - 1.0) * std::sin(R);
    };
    auto m2 = [nu, ga](double x) {
        const double b = 1.0 + x;
        const double R = std::pow(b, ga);
        const double c = std::cos(R), s = std::sin(R);
        return (nu - 1.0) * std::pow(b, nu - 2.0) * (nu * c - ga * std::pow(b, ga) * s) +
               std::pow(b, nu - 1.0) *
                   (-nu * ga * std::pow(b, ga - 1.0) * s - ga * ga * std::pow(b, ga - 1.0) * s -
                    ga * ga * std::pow(b, 2.0 * ga - 1.0) * c);
    };
    auto lsum = [m, m1](double x) { return std::exp(m(x)) * (1.0 + m1(x)); };
    const double alpha = 0.5 * (0.5 + (1.0 - nu - ga));
    return {"oscillating_cos_power", {{"nu", nu}, {"gamma", ga}}, m, m1, m2, lsum, 1.0, alpha};
}

NonlinearityFamily make_amplitude_sin(const std::map<std::string, double>& params) {
    reject_unknown(params, "amplitude_sin", {"nu", "a"});
    const double nu = require(params, "amplitude_sin", "nu");
    const double a = require(params, "amplitude_sin", "a");
    if (!(nu > 0.0 && nu < 0.5)) bad_param("amplitude_sin", "nu must lie in (0, 1/2)");
    if (!(std::abs(a) < 1.0)) bad_param("amplitude_sin", "|a| must be < 1");
    auto m = [nu, a](double x) { return std::log(1.0 + a * std::sin(std::pow(1.0 + x, nu))); };
    auto m1 = [nu, a](double x) {
        const double b = 1.0 + x;
        const double P = std::pow(b, nu);
        return a * std::cos(P) * nu * std::pow(b, nu - 1.0) / (1.0 + a * std::sin(P));
    };
    auto m2 = [nu, a](double x) {
        const double b = 1.0 + x;
        const double P = std::pow(b, nu);
        const double D = 1.0 + a * std::sin(P);
        const double c = a * std::cos(P);
        return nu * ((nu - 1.0) * std::pow(b, nu - 2.0) * c / D -
                     nu * std::pow(b, 2.0 * nu - 2.0) * a * std::sin(P) / D -
                     nu * std::pow(b, 2.0 * nu - 2.0) * c * c / (D * D));
    };
    auto lsum = [m, m1](double x) { return std::exp(m(x)) * (1.0 + m1(x)); };
    const double alpha = 0.5 * (0.5 + (1.0 - nu));
    return {"amplitude_sin", {{"nu", nu}, {"a", a}}, m, m1, m2, lsum, 1.0, alpha};
}

} // namespace

NonlinearityFamily make_builtin(const std::string& name,
                                const std::map<std::string, double>& params) {
    if (name == "pure_exp") return make_pure_exp(params);
    if (name == "power_log") return make_power_log(params);
    if (name == "log_power") return make_log_power(params);
    if (name == "exp_shift") return make_exp_shift(params);
    if (name == "oscillating_sin_log") return make_oscillating_sin_log(params);
    if (name == "oscillating_cos_power") return make_oscillating_cos_power(params);
    if (name == "amplitude_sin") return make_amplitude_sin(params);
    std::ostringstream os;
    os << "unknown family '" << name << "'; builtins:";
    for (const auto& n : builtin_names()) os << ' ' << n;
    throw std::invalid_argument(os.str());
}

std::vector<std::string> builtin_names() {
    return {"pure_exp",           "power_log",
            "log_power",          "exp_shift",
            "oscillating_sin_log", "oscillating_cos_power",
            "amplitude_sin"};
}

namespace {

// Decide whether a sampled nonnegative sequence decays over the last half of
// the grid.  Values are compared through maxima of two consecutive windows so
// an oscillating sequence is judged by its envelope.  An all-tiny sequence
// (identically-zero ratio up to rounding) passes outright.
bool envelope_decreasing(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 4) return false;
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    if (vmax <= 1e-14) return true;
    const std::size_t half = n / 2;
    const std::size_t mid = half + (n - half) / 2;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = half; i < mid; ++i) m1 = std::max(m1, v[i]);
    for (std::size_t i = mid; i < n; ++i) m2 = std::max(m2, v[i]);
    return m2 <= m1 * (1.0 + 1e-12) + 1e-14;
}

} // namespace

SlowVariationReport certify_slow_variation(const NonlinearityFamily& fam, double alpha,
                                           std::span<const double> log_grid) {
    if (!(alpha > 0.5)) throw std::invalid_argument("certify_slow_variation: alpha must be > 1/2");
    if (log_grid.size() < 4)
        throw std::invalid_argument("certify_slow_variation: grid needs at least 4 points");
    const double ln10 = std::log(10.0);
    for (std::size_t i = 0; i < log_grid.size(); ++i) {
        if (i && !(log_grid[i] > log_grid[i - 1]))
            throw std::invalid_argument("certify_slow_variation: grid must be increasing");
        if (log_grid[i] < std::log(fam.s_pos()) - 1e-12)
            throw std::invalid_argument("certify_slow_variation: grid below s_pos");
    }
    if (log_grid.back() - log_grid.front() < 6.0 * ln10)
        throw std::invalid_argument("certify_slow_variation: grid must span >= 6 decades");

    SlowVariationReport rep;
    rep.alpha = alpha;
    rep.log_grid.assign(log_grid.begin(), log_grid.end());
    rep.ratio1.reserve(log_grid.size());
    rep.ratio2.reserve(log_grid.size());
    for (double x : log_grid) {
        rep.ratio1.push_back(std::abs(fam.dlogL(x)) * std::pow(x, alpha));
        // theta'(X) * X * log X = m2(x) * x  (since theta'(X) = m2/X).
        rep.ratio2.push_back(std::abs(fam.d2logL(x)) * x);
    }
    rep.ratio1_pass = envelope_decreasing(rep.ratio1);
    rep.ratio2_pass = envelope_decreasing(rep.ratio2);
    rep.pass = rep.ratio1_pass && rep.ratio2_pass;
    return rep;
}

UniformRatioReport certify_uniform_ratio(const NonlinearityFamily& fam, double alpha,
                                         std::span<const double> log_grid) {
    if (!(alpha > 0.5)) throw std::invalid_argument("certify_uniform_ratio: alpha must be > 1/2");
    if (log_grid.empty()) throw std::invalid_argument("certify_uniform_ratio: empty grid");
    UniformRatioReport rep;
    rep.alpha = alpha;
    rep.log_grid.assign(log_grid.begin(), log_grid.end());
    rep.worst.reserve(log_grid.size());
    const int lambda_samples = 33;
    for (double x : log_grid) {
        if (x <= std::log(fam.s_pos()))
            throw std::invalid_argument("certify_uniform_ratio: grid point below s_pos");
        const double U = std::pow(x, alpha) / 8.0; // window of log(lambda)
        const double mx = fam.logL(x);
        double worst = 0.0;
        for (int j = 0; j < lambda_samples; ++j) {
            const double u = -U + 2.0 * U * (j + 0.5) / lambda_samples;
            if (std::abs(u) < 1e-8 * U) continue;
            const double ratio = std::abs(std::expm1(fam.logL(x + u) - mx));
            const double normalized =
                ratio * std::pow(x, alpha) / (4.0 * std::abs(u) + 1e-300);
            worst = std::max(worst, normalized);
        }
        rep.worst.push_back(worst);
    }
    const double slack = 1.05;
    std::size_t from = rep.worst.size();
    for (std::size_t i = rep.worst.size(); i-- > 0;) {
        if (rep.worst[i] <= slack)
            from = i;
        else
            break;
    }
    rep.pass_from = from;
    rep.pass = from == 0;
    return rep;
}

} // namespace blowlab
