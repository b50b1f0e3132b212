#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "sphericity/errors.hpp"

namespace sphericity::quadrature {

struct QuadratureResult {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    std::size_t evaluations = 0;
};

inline constexpr double kDefaultRelTol = 1e-9;
inline constexpr int kMaxDepth = 30;
inline constexpr int kMaxDoublings = 200;
inline constexpr int kDivergencePanels = 8;

namespace detail {

// Kronrod 15-point abscissae and weights with the embedded 7-point Gauss rule.
inline constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                  0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                  0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                  0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                  0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                  0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                  0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                 0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error, resabs;
    int depth;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b, int depth) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double resg = fc * wg[3];
    double resk = fc * wgk[7];
    double resabs = std::fabs(resk);
    double fv1[7], fv2[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        fv1[j] = f(center - dx);
        fv2[j] = f(center + dx);
        const double sum = fv1[j] + fv2[j];
        resk += wgk[j] * sum;
        resabs += wgk[j] * (std::fabs(fv1[j]) + std::fabs(fv2[j]));
        if (j % 2 == 1) resg += wg[j / 2] * sum;
    }
    const double reskh = 0.5 * resk;
    double resasc = wgk[7] * std::fabs(fc - reskh);
    for (int j = 0; j < 7; ++j) resasc += wgk[j] * (std::fabs(fv1[j] - reskh) + std::fabs(fv2[j] - reskh));

    const double scale = std::fabs(half);
    resk *= half;
    resabs *= scale;
    resasc *= scale;
    double err = std::fabs((resk - resg * half));
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
    if (!std::isfinite(resk)) throw DomainError("quadrature: integrand not finite on [" + std::to_string(a) + ", " +
                                                std::to_string(b) + "]");
    return {a, b, resk, err, resabs, depth};
}

}  // namespace detail

/// Global adaptive Gauss-Kronrod (15/7) quadrature on [a, b]. Stops when the
/// summed error estimate is below max(rel_tol |I|, abs_tol).
template <class F>
QuadratureResult integrate_finite(F&& f, double a, double b, double rel_tol = kDefaultRelTol, double abs_tol = 0.0) {
    if (!(a <= b)) throw DomainError("integrate_finite: need a <= b");
    if (a == b) return {};
    constexpr double eps = std::numeric_limits<double>::epsilon();

    std::priority_queue<detail::Segment> active;
    std::vector<detail::Segment> settled;  // at round-off level, not worth splitting
    QuadratureResult out;
    auto first = detail::gk15(f, a, b, 0);
    out.evaluations = 15;
    double value = first.value;
    double error = first.error;
    active.push(first);

    while (error > std::max(rel_tol * std::fabs(value), abs_tol)) {
        if (active.empty()) break;
        const auto seg = active.top();
        active.pop();
        if (seg.error <= 50.0 * eps * seg.resabs) {
            settled.push_back(seg);
            continue;
        }
        if (seg.depth >= kMaxDepth)
            throw ConvergenceError("integrate_finite: subdivision depth cap reached near [" + std::to_string(seg.a) +
                                   ", " + std::to_string(seg.b) + "]");
        const double mid = 0.5 * (seg.a + seg.b);
        const auto left = detail::gk15(f, seg.a, mid, seg.depth + 1);
        const auto right = detail::gk15(f, mid, seg.b, seg.depth + 1);
        out.evaluations += 30;
        value += left.value + right.value - seg.value;
        error += left.error + right.error - seg.error;
        active.push(left);
        active.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    value = 0.0;
    error = 0.0;
    for (const auto& s : settled) value += s.value, error += s.error;
    while (!active.empty()) {
        value += active.top().value;
        error += active.top().error;
        active.pop();
    }
    out.value = value;
    out.abs_error_estimate = error;
    return out;
}

/// Integral over [a, inf) for integrands that eventually decay. Panels of
/// doubling width are added until a panel is negligible relative to the
/// running total; the remainder is estimated from a power-law tail
/// K t^{-q} with q = tail_exponent_hint when it exceeds 1, otherwise from the
/// local decay between the last two panel ends.
template <class F>
QuadratureResult integrate_semi_infinite(F&& f, double a, double rel_tol = kDefaultRelTol,
                                         double tail_exponent_hint = 0.0) {
    if (!std::isfinite(a)) throw DomainError("integrate_semi_infinite: lower limit must be finite");
    const double w0 = a > 0.0 ? a : 1.0;
    QuadratureResult out;
    double acc = 0.0;
    double prev_contrib = std::numeric_limits<double>::infinity();
    int growing = 0;
    double lo = a;
    double width = w0;
    double f_lo = f(lo);
    ++out.evaluations;

    for (int k = 0; k < kMaxDoublings; ++k) {
        const double hi = lo + width;
        const auto panel = integrate_finite(f, lo, hi, rel_tol, 0.1 * rel_tol * std::fabs(acc));
        const double f_hi = f(hi);
        out.evaluations += panel.evaluations + 1;
        acc += panel.value;
        out.abs_error_estimate += panel.abs_error_estimate;

        const double contrib = std::fabs(panel.value);
        const bool decreasing = std::fabs(f_hi) < std::fabs(f_lo) || f_hi == 0.0;
        if (decreasing && contrib >= prev_contrib) {
            if (++growing >= kDivergencePanels)
                throw DivergenceError("integrate_semi_infinite: panel contributions stopped decreasing beyond t = " +
                                      std::to_string(hi));
        } else {
            growing = 0;
        }
        prev_contrib = contrib;

        if (decreasing && contrib <= rel_tol * std::fabs(acc)) {
            double tail = 0.0;
            if (f_hi != 0.0) {
                double q = tail_exponent_hint;
                if (!(q > 1.0)) {
                    q = std::log(std::fabs(f_lo / f_hi)) / std::log(hi / lo);
                    if (!(q > 1.0))
                        throw DivergenceError("integrate_semi_infinite: integrand decays no faster than 1/t");
                }
                tail = f_hi * hi / (q - 1.0);
                ++out.evaluations;
            }
            out.value = acc + tail;
            out.abs_error_estimate += std::fabs(tail);
            return out;
        }
        lo = hi;
        f_lo = f_hi;
        width *= 2.0;
    }
    throw DivergenceError("integrate_semi_infinite: no convergence after " + std::to_string(kMaxDoublings) +
                          " doublings");
}

}  // namespace sphericity::quadrature
