#pragma once

// Cumulants of -(2/N) log lambda under H0, standardized cumulants of T,
// the Edgeworth composition coefficients gamma_{k,j}, and the b_s / B(v)
// majorants used by the error bounds.

#include <cmath>
#include <string>
#include <vector>

#include "sphericity/design.hpp"
#include "sphericity/errors.hpp"
#include "sphericity/specfun.hpp"

namespace sphericity {

inline constexpr int kDefaultCumulantOrder = 6;
inline constexpr int kMaxCumulantOrder = 10;

struct CumulantSet {
    int s_max = 0;
    std::vector<double> kappa;   ///< kappa[s] for s = 1..s_max (index 0 unused)
    std::vector<double> ktilde;  ///< standardized kappa[s]/kappa2^{s/2}, s = 3..s_max (lower indices unused)
    double m0 = 0.0;             ///< (n1 - p - 1/2)/2
    double m = 0.0;              ///< m0 sqrt(kappa2)

    double kappa1() const { return kappa.at(1); }
    double kappa2() const { return kappa.at(2); }
};

/// Exact cumulants kappa^(1..s_max) of -(2/N) log lambda, with N, N1 replaced
/// by n + 1, n1 + 1 and tau1 = N1/N. Polygamma sums are taken term by term.
inline CumulantSet cumulant_set(const MonotoneDesign& d, int s_max = kDefaultCumulantOrder) {
    if (s_max < 2 || s_max > kMaxCumulantOrder)
        throw DomainError("cumulant_set: s_max must lie in [2, 10], got " + std::to_string(s_max));
    using specfun::polygamma;
    const long double n = d.n();
    const long double n1 = d.n1();
    const int p1 = d.p1();
    const int p2 = d.p2();
    const long double p = d.p();
    const long double tau = static_cast<long double>(d.N1()) / d.N();
    const long double c = p1 + tau * p2;
    const long double pooled = 0.5L * (n * p1 + n1 * p2);

    CumulantSet cs;
    cs.s_max = s_max;
    cs.kappa.assign(s_max + 1, 0.0);
    cs.ktilde.assign(s_max + 1, 0.0);

    {
        long double k1 = -c * std::log(c) + c * polygamma(0, pooled);
        if (p2 > 0) k1 += tau * p2 * std::log(tau);
        for (int l = 1; l <= p1; ++l) k1 -= polygamma(0, 0.5L * (n - p1 + l));
        long double tail = 0.0L;
        for (int l = 1; l <= p2; ++l) tail += polygamma(0, 0.5L * (n1 - p + l));
        cs.kappa[1] = static_cast<double>(k1 - tau * tail);
    }
    for (int s = 2; s <= s_max; ++s) {
        long double first = 0.0L;
        for (int l = 1; l <= p1; ++l) first += polygamma(s - 1, 0.5L * (n - p1 + l));
        long double second = 0.0L;
        for (int l = 1; l <= p2; ++l) second += polygamma(s - 1, 0.5L * (n1 - p + l));
        const long double bracket =
            std::pow(c, static_cast<long double>(s)) * polygamma(s - 1, pooled) - first -
            std::pow(tau, static_cast<long double>(s)) * second;
        cs.kappa[s] = static_cast<double>((s % 2 == 1) ? bracket : -bracket);
    }
    const double k2 = cs.kappa[2];
    if (!(k2 > 0.0)) throw DomainError("cumulant_set: non-positive second cumulant for " + d.to_string());
    for (int s = 3; s <= s_max; ++s) cs.ktilde[s] = cs.kappa[s] / std::pow(k2, 0.5 * s);
    cs.m0 = 0.5 * (d.n1() - d.p() - 0.5);
    cs.m = cs.m0 * std::sqrt(k2);
    return cs;
}

/// Standardized statistic T = (-(2/N) log lambda - kappa1)/sqrt(kappa2).
inline double standardize(double scaled_statistic, const CumulantSet& cs) {
    return (scaled_statistic - cs.kappa1()) / std::sqrt(cs.kappa2());
}

/// The coefficient b_s of the standardized-cumulant majorant:
/// 0 < ktilde^(s)/s! < m^{-(s-2)} b_{s-3} for s >= 3.
inline double lemma1_b(int s, const MonotoneDesign& d, const CumulantSet& cs) {
    if (s < 0) throw DomainError("lemma1_b: s must be non-negative");
    const double n = d.n();
    const double n1 = d.n1();
    const double p1 = d.p1();
    const double p2 = d.p2();
    const double tau = d.tau1();
    const double k2 = cs.kappa2();
    const double a = n1 - d.p() - 0.5;
    const double e = s + 1.0;
    const double denom = k2 * (s + 1.0) * (s + 2.0) * (s + 3.0);

    double b = 2.0 / denom * (std::pow(a / (n - p1 - 0.5), e) - std::pow(a / (n - 0.5), e));
    b += 2.0 * tau * tau / denom * (std::pow(tau, e) - std::pow(tau * a / (n1 - p1 - 0.5), e));
    b -= (2.0 / (k2 * (s + 3.0) * n * n) + 2.0 * (p1 + tau * p2) / (k2 * (s + 2.0) * (s + 3.0) * n)) *
         std::pow(a / n, e);
    return b;
}

namespace detail {

// Below this magnitude the L-functions are summed as power series; the closed
// forms cancel like 1/x^2 there.
inline constexpr double kLSeriesCutoff = 0.2;

template <class Coef>
double l_series(double x, int first_power, Coef coef) {
    double sum = 0.0;
    double power = std::pow(x, first_power);
    for (int k = 0; k < 200; ++k) {
        const double term = coef(k) * power;
        sum += term;
        if (std::fabs(term) <= 1e-18 * std::fabs(sum)) break;
        power *= x;
    }
    return sum;
}

inline void check_l_argument(double x, const char* name) {
    if (!(x < 1.0) || !(x > -1.0)) throw DomainError(std::string(name) + ": argument must lie in (-1, 1)");
}

}  // namespace detail

/// L1(x) = sum_{s>=1} x^s/(s(s+1)(s+2)).
inline double L1(double x) {
    detail::check_l_argument(x, "L1");
    if (std::fabs(x) < detail::kLSeriesCutoff)
        return detail::l_series(x, 1, [](int k) { return 1.0 / ((k + 1.0) * (k + 2.0) * (k + 3.0)); });
    return (3.0 * x - 2.0) / (4.0 * x) - (1.0 - x) * (1.0 - x) / (2.0 * x * x) * std::log1p(-x);
}

/// L2(x) = sum_{s>=0} x^{s+1}/(s+3).
inline double L2(double x) {
    detail::check_l_argument(x, "L2");
    if (std::fabs(x) < detail::kLSeriesCutoff)
        return detail::l_series(x, 1, [](int k) { return 1.0 / (k + 3.0); });
    return -std::log1p(-x) / (x * x) - (2.0 + x) / (2.0 * x);
}

/// L3(x) = sum_{s>=0} x^{s+1}/((s+2)(s+3)).
inline double L3(double x) {
    detail::check_l_argument(x, "L3");
    if (std::fabs(x) < detail::kLSeriesCutoff)
        return detail::l_series(x, 1, [](int k) { return 1.0 / ((k + 2.0) * (k + 3.0)); });
    return (1.0 - x) / (x * x) * std::log1p(-x) + (2.0 - x) / (2.0 * x);
}

/// Closed form of B(v) = sum_s b_s v^s for 0 <= v < 1.
inline double big_B(double v, const MonotoneDesign& d, const CumulantSet& cs) {
    if (!(v >= 0.0 && v < 1.0)) throw DomainError("big_B: v must lie in [0, 1)");
    if (v == 0.0) return lemma1_b(0, d, cs);
    const double n = d.n();
    const double n1 = d.n1();
    const double p1 = d.p1();
    const double tau = d.tau1();
    const double a = n1 - d.p() - 0.5;
    const double r1 = a / (n - p1 - 0.5);
    const double r2 = a / (n - 0.5);
    const double r3 = tau * a / (n1 - p1 - 0.5);
    const double r4 = a / n;

    const double bracket = L1(r1 * v) - L1(r2 * v) + tau * tau * (L1(tau * v) - L1(r3 * v)) -
                           L2(r4 * v) / (n * n) - d.effective_dim() / n * L3(r4 * v);
    return 2.0 / (v * cs.kappa2()) * bracket;
}

/// c_v = 1 - 2 v B(v).
inline double c_v(double v, const MonotoneDesign& d, const CumulantSet& cs) { return 1.0 - 2.0 * v * big_B(v, d, cs); }

/// Coefficients of (sum_j e_j x^j)^k truncated at x^order, for k = 0..max_power.
/// result[k][j] is the sum over weak compositions s_1 + ... + s_k = j of
/// e_{s_1} ... e_{s_k}.
inline std::vector<std::vector<double>> composition_sums(const std::vector<double>& e, int max_power, int order) {
    std::vector<std::vector<double>> out(max_power + 1, std::vector<double>(order + 1, 0.0));
    out[0][0] = 1.0;
    for (int k = 1; k <= max_power; ++k)
        for (int j = 0; j <= order; ++j) {
            double sum = 0.0;
            for (int i = 0; i <= j && i < static_cast<int>(e.size()); ++i) sum += out[k - 1][j - i] * e[i];
            out[k][j] = sum;
        }
    return out;
}

/// Edgeworth coefficients gamma[k][j], 1 <= k <= s, 0 <= j <= s - k.
struct GammaTable {
    int order = 0;
    std::vector<std::vector<double>> gamma;  ///< gamma[k][j]; row 0 unused

    double operator()(int k, int j) const { return gamma.at(k).at(j); }
};

/// gamma_{k,j} = sum over s_1 + ... + s_k = j of prod ktilde^(s_i+3)/(s_i+3)!.
inline GammaTable gamma_table(const CumulantSet& cs, int s) {
    if (s < 1) throw DomainError("gamma_table: order must be >= 1");
    if (cs.s_max < s + 2)
        throw DomainError("gamma_table: order " + std::to_string(s) + " needs cumulants up to " +
                          std::to_string(s + 2));
    std::vector<double> e(s);
    for (int i = 0; i < s; ++i) e[i] = cs.ktilde[i + 3] / specfun::detail::factorial(i + 3);
    const auto sums = composition_sums(e, s, s - 1);

    GammaTable table;
    table.order = s;
    table.gamma.assign(s + 1, {});
    for (int k = 1; k <= s; ++k) table.gamma[k].assign(sums[k].begin(), sums[k].begin() + (s - k + 1));
    return table;
}

}  // namespace sphericity
