#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "sphericity/cumulants.hpp"
#include "sphericity/design.hpp"
#include "sphericity/errors.hpp"
#include "sphericity/specfun.hpp"

namespace sphericity {

/// Edgeworth expansion Q_s of the null CDF of T and its truncated
/// characteristic function.
class EdgeworthExpansion {
public:
    EdgeworthExpansion(const CumulantSet& cs, int order) : EdgeworthExpansion(gamma_table(cs, order)) {}

    explicit EdgeworthExpansion(GammaTable table) : table_(std::move(table)) {
        if (table_.order < 1) throw DomainError("EdgeworthExpansion: order must be >= 1");
        weights_.assign(3 * table_.order + 1, 0.0);
        // Collapse (1/k!) gamma_{k,j} onto the Hermite degree r = 3k + j.
        double inv_fact = 1.0;
        for (int k = 1; k <= table_.order; ++k) {
            inv_fact /= k;
            for (int j = 0; j <= table_.order - k; ++j) weights_[3 * k + j] += inv_fact * table_(k, j);
        }
    }

    int order() const noexcept { return table_.order; }
    const GammaTable& gamma() const noexcept { return table_; }

    /// Weight w_r attached to h_{r-1} in the CDF and h_r in the density, r = 3k + j.
    const std::vector<double>& degree_weights() const noexcept { return weights_; }

    /// Raw Q_s(x). Not clamped: the expansion can leave [0, 1] in the tails.
    double cdf(double x) const {
        const double phi = specfun::normal_pdf(x);
        if (phi == 0.0) return x > 0 ? 1.0 : 0.0;
        return specfun::normal_cdf(x) - phi * hermite_sum(x, -1);
    }

    double cdf_clamped(double x) const { return std::clamp(cdf(x), 0.0, 1.0); }

    /// dQ_s/dx = phi(x) [1 + sum w_r h_r(x)].
    double density(double x) const { return specfun::normal_pdf(x) * (1.0 + hermite_sum(x, 0)); }

    /// Truncated characteristic function exp(-t^2/2) {1 + sum w_r (it)^r}.
    std::complex<double> cf(double t) const {
        const std::complex<double> it(0.0, t);
        std::complex<double> poly = 1.0;
        std::complex<double> power = 1.0;
        for (std::size_t r = 1; r < weights_.size(); ++r) {
            power *= it;
            if (weights_[r] != 0.0) poly += weights_[r] * power;
        }
        return std::exp(-0.5 * t * t) * poly;
    }

private:
    double hermite_sum(double x, int shift) const {
        // Single upward recurrence pass over h_0 .. h_{max degree}.
        double sum = 0.0;
        double prev = 1.0;  // h_0
        double cur = x;     // h_1
        const int top = static_cast<int>(weights_.size()) - 1 + shift;
        for (int deg = 1; deg <= top; ++deg) {
            if (deg > 1) {
                const double next = x * cur - (deg - 1) * prev;
                prev = cur;
                cur = next;
            }
            const int r = deg - shift;
            if (r >= 3 && weights_[r] != 0.0) sum += weights_[r] * cur;
        }
        return sum;
    }

    GammaTable table_;
    std::vector<double> weights_;
};

/// q(alpha) = (chi2_f(alpha)/N - kappa1)/sqrt(kappa2), with f = (p+2)(p-1)/2.
inline double q_alpha(double alpha, const MonotoneDesign& d, const CumulantSet& cs) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("q_alpha: alpha must lie in (0, 1)");
    const double crit = specfun::chi2_quantile(alpha, d.chi2_dof());
    return standardize(crit / d.N(), cs);
}

}  // namespace sphericity
