#pragma once

// Special functions: polygamma, regularized incomplete gamma, chi-square
// distribution and quantile, standard normal, probabilists' Hermite polynomials.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "sphericity/errors.hpp"

namespace sphericity::specfun {

inline constexpr int kMaxPolygammaOrder = 12;
inline constexpr int kMaxHermiteOrder = 40;

namespace detail {

// B_2, B_4, ..., B_30.
inline constexpr std::array<long double, 15> kBernoulliEven = {
    1.0L / 6.0L,
    -1.0L / 30.0L,
    1.0L / 42.0L,
    -1.0L / 30.0L,
    5.0L / 66.0L,
    -691.0L / 2730.0L,
    7.0L / 6.0L,
    -3617.0L / 510.0L,
    43867.0L / 798.0L,
    -174611.0L / 330.0L,
    854513.0L / 138.0L,
    -236364091.0L / 2730.0L,
    8553103.0L / 6.0L,
    -23749461029.0L / 870.0L,
    8615841276005.0L / 14322.0L,
};

inline long double factorial(int k) {
    long double f = 1.0L;
    for (int i = 2; i <= k; ++i) f *= static_cast<long double>(i);
    return f;
}

// Asymptotic expansion of psi^(s)(x), valid for x >= 16.
inline long double polygamma_asymptotic(int s, long double x) {
    constexpr long double eps = std::numeric_limits<long double>::epsilon();
    if (s == 0) {
        long double sum = std::log(x) - 0.5L / x;
        const long double inv_x2 = 1.0L / (x * x);
        long double power = inv_x2;
        long double previous = std::numeric_limits<long double>::infinity();
        for (std::size_t k = 1; k <= kBernoulliEven.size(); ++k) {
            const long double term = kBernoulliEven[k - 1] / (2.0L * k) * power;
            if (std::fabs(term) >= previous) break;
            sum -= term;
            if (std::fabs(term) < eps * std::fabs(sum)) break;
            previous = std::fabs(term);
            power *= inv_x2;
        }
        return sum;
    }

    // (-1)^{s+1} [ (s-1)!/x^s + s!/(2 x^{s+1}) + sum_k B_2k (2k+s-1)!/((2k)! x^{2k+s}) ]
    const long double xs = std::pow(x, static_cast<long double>(s));
    long double sum = factorial(s - 1) / xs + factorial(s) / (2.0L * xs * x);
    long double previous = std::numeric_limits<long double>::infinity();
    const long double inv_x2 = 1.0L / (x * x);
    long double power = inv_x2 / xs;
    for (std::size_t k = 1; k <= kBernoulliEven.size(); ++k) {
        // (2k+s-1)!/(2k)!
        long double ratio = 1.0L;
        for (int j = 2 * static_cast<int>(k) + 1; j <= 2 * static_cast<int>(k) + s - 1; ++j)
            ratio *= static_cast<long double>(j);
        const long double term = kBernoulliEven[k - 1] * ratio * power;
        if (std::fabs(term) >= previous) break;
        sum += term;
        if (std::fabs(term) < eps * std::fabs(sum)) break;
        previous = std::fabs(term);
        power *= inv_x2;
    }
    return (s % 2 == 1) ? sum : -sum;
}

}  // namespace detail

/// Polygamma function psi^(s)(a) = d^{s+1}/da^{s+1} log Gamma(a) for a > 0, s <= 12.
///
/// The argument is shifted upward with the recurrence
/// psi^(s)(a) = psi^(s)(a+1) - (-1)^s s!/a^{s+1} until a >= 16, then the
/// Bernoulli-number asymptotic series is summed.
template <std::floating_point Real>
Real polygamma(int s, Real a) {
    if (!(a > Real(0)) || !std::isfinite(a))
        throw DomainError("polygamma: argument must be positive and finite, got " + std::to_string(a));
    if (s < 0 || s > kMaxPolygammaOrder)
        throw DomainError("polygamma: unsupported order " + std::to_string(s));

    long double x = a;
    long double shift = 0.0L;
    const long double sfact = detail::factorial(s);
    const long double sign = (s % 2 == 0) ? 1.0L : -1.0L;  // (-1)^s
    while (x < 16.0L) {
        if (s == 0)
            shift -= 1.0L / x;
        else
            shift -= sign * sfact / std::pow(x, static_cast<long double>(s + 1));
        x += 1.0L;
    }
    return static_cast<Real>(detail::polygamma_asymptotic(s, x) + shift);
}

inline double digamma(double a) { return polygamma(0, a); }
inline double trigamma(double a) { return polygamma(1, a); }

namespace detail {

// log Gamma(a) - [(a - 1/2) log a - a + log(2 pi)/2] for a >= 10.
inline double stirling_correction(double a) {
    const double inv = 1.0 / a;
    const double inv2 = inv * inv;
    return inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
}

// log of x^a e^{-x} / Gamma(a), accurate for large a.
inline double log_gamma_prefactor(double a, double x) {
    if (a < 10.0) return a * std::log(x) - x - std::lgamma(a);
    const double d = (x - a) / a;
    const double log1pmx = std::log1p(d) - d;
    return a * log1pmx + 0.5 * std::log(a) - 0.5 * std::log(2.0 * std::numbers::pi) - stirling_correction(a);
}

inline constexpr int kIncompleteGammaMaxIter = 200000;

inline double lower_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kIncompleteGammaMaxIter; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-17) return sum * std::exp(log_gamma_prefactor(a, x));
    }
    throw ConvergenceError("incomplete gamma series did not converge");
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
inline double upper_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kIncompleteGammaMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) return h * std::exp(log_gamma_prefactor(a, x));
    }
    throw ConvergenceError("incomplete gamma continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete gamma pair (P(a, x), Q(a, x)).
inline std::pair<double, double> regularized_gamma(double a, double x) {
    if (!(a > 0.0)) throw DomainError("regularized_gamma: shape must be positive");
    if (x < 0.0 || std::isnan(x)) throw DomainError("regularized_gamma: x must be non-negative");
    if (x == 0.0) return {0.0, 1.0};
    if (std::isinf(x)) return {1.0, 0.0};
    if (x < a + 1.0) {
        const double p = detail::lower_series(a, x);
        return {p, 1.0 - p};
    }
    const double q = detail::upper_fraction(a, x);
    return {1.0 - q, q};
}

inline double gamma_p(double a, double x) { return regularized_gamma(a, x).first; }
inline double gamma_q(double a, double x) { return regularized_gamma(a, x).second; }

/// Chi-square distribution function G_k(x).
inline double chi2_cdf(double x, double k) {
    if (!(k >= 1.0)) throw DomainError("chi2_cdf: degrees of freedom must be >= 1");
    if (x < 0.0 || std::isnan(x)) throw DomainError("chi2_cdf: x must be non-negative");
    return gamma_p(0.5 * k, 0.5 * x);
}

/// Upper tail 1 - G_k(x).
inline double chi2_sf(double x, double k) {
    if (!(k >= 1.0)) throw DomainError("chi2_sf: degrees of freedom must be >= 1");
    if (x < 0.0 || std::isnan(x)) throw DomainError("chi2_sf: x must be non-negative");
    return gamma_q(0.5 * k, 0.5 * x);
}

inline double chi2_pdf(double x, double k) {
    if (x <= 0.0) return (k == 2.0 && x == 0.0) ? 0.5 : 0.0;
    const double a = 0.5 * k;
    return 0.5 * std::exp(detail::log_gamma_prefactor(a, 0.5 * x)) / (0.5 * x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline std::pair<double, double> normal_cdf_pdf(double x) { return {normal_cdf(x), normal_pdf(x)}; }

/// Standard normal quantile (Acklam's rational approximation plus one Halley step).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01, -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double low = 0.02425;
    double x;
    if (p < low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

/// Upper 100*alpha percentile of chi-square with k degrees of freedom:
/// the x with G_k(x) = 1 - alpha.
inline double chi2_quantile(double alpha, double k) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("chi2_quantile: alpha must lie in (0,1)");
    if (!(k >= 1.0)) throw DomainError("chi2_quantile: degrees of freedom must be >= 1");

    // Residual on whichever tail is smaller, for relative accuracy.
    const bool upper = alpha < 0.5;
    auto residual = [&](double x) {
        return upper ? alpha - chi2_sf(x, k) : chi2_cdf(x, k) - (1.0 - alpha);
    };

    // Wilson-Hilferty start.
    const double z = normal_quantile(1.0 - alpha);
    const double h = 2.0 / (9.0 * k);
    double x = k * std::pow(std::max(1.0 - h + z * std::sqrt(h), 1e-3), 3.0);

    double lo = x;
    double hi = x;
    while (residual(lo) > 0.0) {
        lo *= 0.5;
        if (lo < 1e-300) return 0.0;
    }
    while (residual(hi) < 0.0) hi = hi * 2.0 + 1.0;

    x = std::clamp(x, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double r = residual(x);
        if (r == 0.0) return x;
        if (r < 0.0)
            lo = x;
        else
            hi = x;
        const double pdf = chi2_pdf(x, k);
        double next = (pdf > 0.0) ? x - r / pdf : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - x) <= 1e-15 * std::fabs(x) || hi - lo <= 1e-15 * hi) return next;
        x = next;
    }
    throw ConvergenceError("chi2_quantile: root finding did not converge");
}

/// Probabilists' Hermite polynomial h_r(x), phi(x) h_r(x) = (-1)^r d^r/dx^r phi(x).
template <std::floating_point Real>
Real hermite(int r, Real x) {
    if (r < 0 || r > kMaxHermiteOrder) throw DomainError("hermite: order out of range " + std::to_string(r));
    if (r == 0) return Real(1);
    Real prev = Real(1);
    Real cur = x;
    for (int k = 1; k < r; ++k) {
        const Real next = x * cur - Real(k) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

}  // namespace sphericity::specfun
