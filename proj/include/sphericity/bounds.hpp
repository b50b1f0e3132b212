#pragma once

// Computable uniform error bounds for the Edgeworth expansion of T and their
// grid minimization.

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "sphericity/cumulants.hpp"
#include "sphericity/design.hpp"
#include "sphericity/edgeworth.hpp"
#include "sphericity/errors.hpp"
#include "sphericity/quadrature.hpp"
#include "sphericity/specfun.hpp"

namespace sphericity {

inline constexpr double kBoundsRelTol = 1e-10;

/// Everything the bound formulas need for a design at expansion order s.
struct BoundContext {
    MonotoneDesign design;
    CumulantSet cs;
    GammaTable gamma;
    std::vector<double> b;                 ///< b_0 .. b_s
    std::vector<std::vector<double>> cb;   ///< compositions of b: cb[k][j], k <= s+1, j <= s
    std::vector<double> weights;           ///< (1/k!) gamma_{k,j} collapsed onto r = 3k + j

    BoundContext(const MonotoneDesign& d, int s)
        : design(d), cs(cumulant_set(d, std::max(kDefaultCumulantOrder, s + 2))), gamma(gamma_table(cs, s)) {
        b.resize(s + 1);
        for (int i = 0; i <= s; ++i) b[i] = lemma1_b(i, d, cs);
        cb = composition_sums(b, s + 1, s);
        weights = EdgeworthExpansion(gamma).degree_weights();
    }

    int order() const { return gamma.order; }
    double m() const { return cs.m; }
    double m0() const { return cs.m0; }
};

/// R_{k,l}(v) = v^{-l} (B(v)^k - sum_{j<l} c_{k,j} v^j).
inline double remainder_R(int k, int l, double v, double Bv, const BoundContext& ctx) {
    double head = 0.0;
    for (int j = l - 1; j >= 0; --j) head = head * v + ctx.cb.at(k).at(j);
    return (std::pow(Bv, k) - head) / std::pow(v, l);
}

inline double u1(double v, const BoundContext& ctx) {
    if (!(v > 0.0 && v < 1.0)) throw DomainError("u1: v must lie in (0, 1)");
    const int s = ctx.order();
    const double m = ctx.m();
    const double Bv = big_B(v, ctx.design, ctx.cs);
    const double cv = 1.0 - 2.0 * v * Bv;

    std::vector<double> coef(s + 1, 0.0);
    double inv_fact = 1.0;
    for (int k = 1; k <= s; ++k) {
        inv_fact /= k;
        coef[k] = inv_fact * remainder_R(k, s - k + 1, v, Bv, ctx);
    }
    const double last = std::pow(Bv, s + 1) * inv_fact / (s + 1);

    auto integrand = [&](double t) {
        const double t2 = t * t;
        double poly = 0.0;
        for (int k = s; k >= 1; --k) poly += coef[k] * std::pow(t, s + 2 * k);
        return poly * std::exp(-0.5 * t2) + last * std::pow(t, 3 * s + 2) * std::exp(-0.5 * t2 * cv);
    };
    const auto r = quadrature::integrate_finite(integrand, 0.0, m * v, kBoundsRelTol);
    return 2.0 / std::pow(m, s + 1) * r.value;
}

/// I2(v) = 2 int_{mv}^inf [1/t + sum_r w_r t^{r-1}] exp(-t^2/2) dt.
inline double i2_exact(double v, const BoundContext& ctx) {
    const double lo = ctx.m() * v;
    if (!(lo > 0.0)) throw DomainError("i2_exact: need m v > 0");
    const auto& w = ctx.weights;
    auto integrand = [&](double t) {
        double poly = 0.0;
        for (std::size_t r = w.size() - 1; r >= 3; --r) poly = poly * t + w[r];
        // poly now holds sum w_r t^{r-3}; multiply back by t^2.
        return (1.0 / t + poly * t * t) * std::exp(-0.5 * t * t);
    };
    return 2.0 * quadrature::integrate_semi_infinite(integrand, lo, kBoundsRelTol).value;
}

namespace detail {

// sum_{k,j} gamma_{k,j} (c/2)^{-(3k+j)/2} Gamma((3k+j)/2), without the 1/k!
// that the CDF carries (matches the published tables).
inline double u2_gamma_sum(double c, const BoundContext& ctx) {
    double sum = 0.0;
    for (int k = 1; k <= ctx.order(); ++k)
        for (int j = 0; j <= ctx.order() - k; ++j) {
            const double r = 3 * k + j;
            sum += ctx.gamma(k, j) * std::exp(-0.5 * r * std::log(0.5 * c) + std::lgamma(0.5 * r));
        }
    return sum;
}

inline void check_c(double c, const char* name) {
    if (!(c > 0.0 && c < 1.0)) throw DomainError(std::string(name) + ": c must lie in (0, 1)");
}

}  // namespace detail

inline double u2(double v, double c, const BoundContext& ctx) {
    detail::check_c(c, "u2");
    const double mv = ctx.m() * v;
    return std::exp(-0.5 * mv * mv * (1.0 - c)) *
           (std::sqrt(2.0 * std::numbers::pi / c) / mv + detail::u2_gamma_sum(c, ctx));
}

inline double u2_tilde(double v, double c, const BoundContext& ctx) {
    detail::check_c(c, "u2_tilde");
    const double mv = ctx.m() * v;
    return std::exp(-0.5 * mv * mv * (1.0 - c)) * (1.0 + detail::u2_gamma_sum(c, ctx));
}

/// H(z) = atan(z)/z - log z + log(1 + z^2)/2, evaluated without cancellation for large z.
inline double H(double z) {
    if (!(z > 0.0)) throw DomainError("H: z must be positive");
    if (z > 1.0) return std::atan(z) / z + 0.5 * std::log1p(1.0 / (z * z));
    return std::atan(z) / z - std::log(z) + 0.5 * std::log1p(z * z);
}

/// t^2 F(t; n, n1, p1, p2): minus the log-modulus of the characteristic function
/// of the centred statistic at the rescaled argument t.
inline double t2F(double t, const MonotoneDesign& d) {
    const double n = d.n();
    const double n1 = d.n1();
    const int p1 = d.p1();
    const int p2 = d.p2();
    const double p = d.p();
    const double tau = d.tau1();
    const double c = d.effective_dim();
    const double A = n * p1 + n1 * p2;

    double val = 0.5 * A * H(A / (2.0 * c * t)) + std::log(0.5 * A);
    for (int l = 1; l <= p1; ++l) {
        const double g = n - p1 + l;
        val -= 0.5 * g * H(g / (2.0 * t));
    }
    for (int l = 1; l <= p2; ++l) {
        const double g = n1 - p + l;
        val -= 0.5 * g * H(g / (2.0 * tau * t));
    }
    val -= 0.5 * std::log(0.25 * A * A + c * c * t * t);
    return val;
}

/// Decay exponent hint (p^2 - p - 4)/4 + 1 for the U3 integrand.
inline double u3_tail_exponent(const MonotoneDesign& d) {
    const double p = d.p();
    return (p * p - p - 4.0) / 4.0 + 1.0;
}

/// U3(v) = 2 int_{m0 v}^inf t^{-1} exp(-t^2 F(t)) dt. Diverges for p < 3.
inline double u3(double v, const MonotoneDesign& d) {
    if (d.p() < 3) throw DivergenceError("u3: the integral diverges for p < 3 (p = " + std::to_string(d.p()) + ")");
    const double m0 = 0.5 * (d.n1() - d.p() - 0.5);
    const double lo = m0 * v;
    if (!(lo > 0.0)) throw DomainError("u3: need m0 v > 0");
    auto integrand = [&](double t) { return std::exp(-t2F(t, d)) / t; };
    return 2.0 * quadrature::integrate_semi_infinite(integrand, lo, kBoundsRelTol, u3_tail_exponent(d)).value;
}

struct BoundEntry {
    double value = std::numeric_limits<double>::quiet_NaN();
    double v = std::numeric_limits<double>::quiet_NaN();
    double c = std::numeric_limits<double>::quiet_NaN();  ///< unused by BOUND1
    double c_v = std::numeric_limits<double>::quiet_NaN();
    double U1 = std::numeric_limits<double>::quiet_NaN();
    double middle = std::numeric_limits<double>::quiet_NaN();  ///< I2, U2 or U2-tilde at the minimizer
    double U3 = std::numeric_limits<double>::quiet_NaN();
    bool feasible = false;  ///< false when the constrained grid is empty
};

struct BoundReport {
    BoundEntry bound1, bound2, bound3, bound4;
    double kappa2 = 0.0;
    double m = 0.0;
    double m0 = 0.0;
    int order = 2;
    double grid_step = 0.05;
};

/// Per-v pieces shared by all four bounds.
struct VSlice {
    double v, c_v, U1, I2, U3;
};

inline std::vector<double> bound_grid(double step) {
    if (!(step > 0.0 && step < 0.5)) throw DomainError("bound grid step must lie in (0, 0.5)");
    const double inv = 1.0 / step;
    const long K = std::lround(inv);
    if (std::fabs(inv - K) > 1e-9 * inv) throw DomainError("bound grid step must divide 1 evenly");
    std::vector<double> g;
    for (long i = 1; i < K; ++i) g.push_back(static_cast<double>(i) / K);
    return g;
}

inline BoundReport minimize_bounds(const MonotoneDesign& d, int s = 2, double grid_step = 0.05, unsigned threads = 1) {
    const BoundContext ctx(d, s);
    const auto grid = bound_grid(grid_step);
    const double two_pi = 2.0 * std::numbers::pi;
    const double m = ctx.m();

    std::vector<VSlice> slices(grid.size());
    auto work = [&](std::size_t i) {
        const double v = grid[i];
        slices[i] = {v, c_v(v, d, ctx.cs), u1(v, ctx), i2_exact(v, ctx), u3(v, d)};
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(grid.size())));
    if (threads == 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) work(i);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < grid.size(); i += threads) work(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    BoundReport rep;
    rep.kappa2 = ctx.cs.kappa2();
    rep.m = m;
    rep.m0 = ctx.m0();
    rep.order = s;
    rep.grid_step = grid_step;

    auto offer = [](BoundEntry& e, double value, const VSlice& sl, double c, double middle) {
        if (!e.feasible || value < e.value) e = {value, sl.v, c, sl.c_v, sl.U1, middle, sl.U3, true};
    };
    // v outer, c inner, strict improvement: ties keep the smallest v, then smallest c.
    for (const auto& sl : slices) {
        offer(rep.bound1, (sl.U1 + sl.I2 + sl.U3) / two_pi, sl, std::numeric_limits<double>::quiet_NaN(), sl.I2);
        const bool v_ok = sl.v >= std::sqrt(2.0) / m;
        for (double c : grid) {
            const double a = u2(sl.v, c, ctx);
            offer(rep.bound2, (sl.U1 + a + sl.U3) / two_pi, sl, c, a);
            const double at = u2_tilde(sl.v, c, ctx);
            const double val = (sl.U1 + at + sl.U3) / two_pi;
            if (c > two_pi / (m * m * sl.v * sl.v)) offer(rep.bound3, val, sl, c, at);
            if (v_ok) offer(rep.bound4, val, sl, c, at);
        }
    }
    return rep;
}

}  // namespace sphericity
