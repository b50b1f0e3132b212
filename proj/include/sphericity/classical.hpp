#pragma once

// Large-sample chi-square expansions of the null distribution of -2 log lambda
// and the comparison quantities A_prop / A_SYS and their biases.

#include <algorithm>
#include <cmath>

#include "sphericity/cumulants.hpp"
#include "sphericity/design.hpp"
#include "sphericity/edgeworth.hpp"
#include "sphericity/errors.hpp"
#include "sphericity/specfun.hpp"

namespace sphericity {

struct AsymptoticCoefficients {
    double beta = 0.0;
    double gamma_coef = 0.0;
    double rho = 1.0;
    double gamma_star = 0.0;
    int f = 0;
    double M = 0.0;  ///< rho N
};

/// Coefficients evaluated at the finite-sample tau1 = N1/N.
inline AsymptoticCoefficients theorem1_coeffs(const MonotoneDesign& d) {
    const double p1 = d.p1();
    const double p2 = d.p2();
    const double p = d.p();
    const double tau = d.tau1();
    const double c = d.effective_dim();
    const double N = d.N();

    AsymptoticCoefficients ac;
    ac.f = d.chi2_dof();
    ac.beta = (p1 * (2 * p1 * p1 + 9 * p1 + 11) +
               (p2 * (2 * p2 * p2 + 9 * p2 + 11) + 6 * p1 * p2 * (p + 3)) / tau -
               2 * (3 * p * p + 6 * p + 2) / c) /
              24.0;
    ac.gamma_coef =
        (p1 * (p1 + 1) * (p1 + 2) * (p1 + 3) +
         (p2 * (p2 + 1) * (p2 + 2) * (p2 + 3) +
          2 * p1 * p2 * ((p2 + 1) * (2 * p + p1 + 7) + 2 * (p1 + 1) * (p1 + 2))) /
             (tau * tau) -
         4 * p * (p + 1) * (p + 2) / (c * c)) /
        48.0;
    const double dof2 = (p + 2) * (p - 1);
    ac.rho = 1.0 - 4.0 * ac.beta / (dof2 * N);
    ac.gamma_star = -2.0 * ac.beta * ac.beta / dof2 + ac.gamma_coef;
    ac.M = ac.rho * N;
    return ac;
}

enum class Statistic { lrt, modified };

/// Pr(-2 log lambda <= x) (lrt) or Pr(-2 rho log lambda <= x) (modified) to the
/// displayed order. Raw value; may leave [0, 1].
inline double cdf_expansion(double x, const MonotoneDesign& d, Statistic which = Statistic::lrt) {
    if (x < 0.0) throw DomainError("cdf_expansion: x must be non-negative");
    const auto ac = theorem1_coeffs(d);
    const double f = ac.f;
    const double g0 = specfun::chi2_cdf(x, f);
    const double g4 = specfun::chi2_cdf(x, f + 4);
    if (which == Statistic::modified) return g0 + ac.gamma_star / (ac.M * ac.M) * (g4 - g0);
    const double N = d.N();
    const double g2 = specfun::chi2_cdf(x, f + 2);
    return g0 + ac.beta / N * (g2 - g0) + ac.gamma_coef / (N * N) * (g4 - g0);
}

/// 1 - Q_2(q(alpha)): the Edgeworth approximation of the Type I error rate.
inline double a_prop(const MonotoneDesign& d, double alpha, int order = 2) {
    const auto cs = cumulant_set(d, std::max(kDefaultCumulantOrder, order + 2));
    const EdgeworthExpansion ex(cs, order);
    return 1.0 - ex.cdf(q_alpha(alpha, d, cs));
}

/// 1 - [chi-square expansion at chi2_f(alpha)].
inline double a_sys(const MonotoneDesign& d, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("a_sys: alpha must lie in (0, 1)");
    return 1.0 - cdf_expansion(specfun::chi2_quantile(alpha, d.chi2_dof()), d);
}

struct Biases {
    double b_prop = 0.0;
    double b_sys = 0.0;
};

inline Biases biases(const MonotoneDesign& d, double alpha, double alpha1_hat) {
    if (!(alpha1_hat >= 0.0 && alpha1_hat <= 1.0)) throw DomainError("biases: alpha1_hat must lie in [0, 1]");
    return {alpha1_hat - a_prop(d, alpha), alpha1_hat - a_sys(d, alpha)};
}

}  // namespace sphericity
