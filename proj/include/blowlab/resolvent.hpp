#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "blowlab/families.hpp"

namespace blowlab {

struct ResolventOptions {
    double tol = 1e-12;   ///< relative accuracy target for G/H and inversions
    double A0 = 3.0;      ///< additive constant in the H-integrand
    double X_max = 700.0; ///< beyond this the analytic tail is the whole value
    bool cache = true;    ///< memoize (X, G(X)) pairs
};

/// Evaluator for the blow-up time resolvent G(X) = int_X^inf ds/f(s), its
/// weighted companion H(X) = int_X^inf (A0 + log f)/f ds, their inverses, and
/// the substitution companion Q(X) = int_X^inf d(eta)/(eta^2 L(eta)).
///
/// All integrals are computed in factored form: with m(s) = log L(e^s) the
/// integrand is exp(-s - m(s)); pulling out exp(-X - m(X)) keeps every
/// intermediate quantity O(1), so G(X)*f(X) is available without overflow for
/// any X the solver can reach.
///
/// Immutable after construction; the value cache is guarded for concurrent
/// readers (shared lock) with serialized writers.
class ResolventTable {
  public:
    explicit ResolventTable(NonlinearityFamily fam, ResolventOptions opt = {});

    double G(double X) const;
    double G_inv(double Y) const;
    /// First-order inverse -log(Y * L(1/Y)); diagnostic companion of G_inv.
    double G_inv_first_order(double Y) const;

    double H(double X) const;
    double H_inv(double Y) const;

    /// Q by direct quadrature in the eta variable (decade panels plus an
    /// algebraic tail).  Valid for X up to ~1e260; an independent route from
    /// the exponential-substitution form used for G.
    double Q(double X) const;
    /// Q at log-scale argument x = log X via the exponential substitution
    /// (the only viable route once X overflows).
    double Q_at_log(double x) const;

    /// G(X) * f(X), computed without over/underflow; tends to 1.
    double G_times_f(double X) const;
    /// H(X) * f(X), computed without over/underflow; ~ X for large X.
    double H_times_f(double X) const;
    /// log G(X), stable for large X.
    double log_G(double X) const;

    double A0() const { return opt_.A0; }
    double tol() const { return opt_.tol; }
    double domain_floor() const { return floor_; }
    double domain_floor_H() const { return floor_H_; }
    const NonlinearityFamily& family() const { return fam_; }

  private:
    double g_scaled(double X) const; ///< G(X)*f(X)
    double h_scaled(double X) const; ///< H(X)*f(X)
    double tail_cut(double X) const;

    NonlinearityFamily fam_;
    ResolventOptions opt_;
    double floor_ = 0.0;
    double floor_H_ = 0.0;
    mutable std::map<double, double> cache_;
    mutable std::shared_mutex cache_mutex_;
};

/// The flat (diffusion-free) blow-up solution psi(t) = G_inv(T - t) together
/// with its self-similar reparametrizations.
class OdeSolution {
  public:
    OdeSolution(std::shared_ptr<const ResolventTable> table, double T);

    double T() const { return T_; }
    const ResolventTable& table() const { return *table_; }

    /// psi(t) = G_inv(T - t); solves psi' = f(psi), psi(t) -> inf as t -> T.
    double psi(double t) const;
    /// psi1(s) = psi(T - e^{-s}) = G_inv(e^{-s}).
    double psi1(double s) const;
    /// h(s) = e^{-s} f(psi1(s)); identically 1 when L == 1.
    double h(double s) const;

  private:
    std::shared_ptr<const ResolventTable> table_;
    double T_;
};

/// One certified asymptotic statement evaluated on a grid.
struct LemmaCheck {
    std::string name;
    std::vector<double> grid;
    std::vector<double> values;
    double threshold = 0.0; ///< bound required of values.back()
    bool decreasing = false;
    bool within = false;
    bool pass = false;
};

struct AsymptoticsReport {
    std::string family;
    std::vector<LemmaCheck> checks;
    bool all_pass = false;
};

/// Evaluate the resolvent asymptotics on desk-scale grids:
///  - G*f -> 1 and H*f/X -> 1 (reciprocal laws)
///  - H ~ G |log G|
///  - H_inv(Y) - G_inv(Y/|log Y|) -> 0
///  - G_inv vs its first-order formula
///  - Q * (X L + X^2 L') -> 1 at rate o(1/log X)
///  - shift bounds f(X-eps) >= (1-eps)^2 f(X) and G(X-eps) <= (1+3 eps) G(X)
AsymptoticsReport certify_asymptotic_lemmas(const ResolventTable& table);

} // namespace blowlab
