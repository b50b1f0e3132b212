#pragma once

// Two-step monotone samples, their cross-product (W) matrices, the
// likelihood ratio for sphericity, its exact null moments, and samplers.

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "sphericity/design.hpp"
#include "sphericity/errors.hpp"
#include "sphericity/rng.hpp"

namespace sphericity {

/// Observed data. `complete` is p x N1 (one observation per column);
/// `partial` is p1 x N2 and holds the observations missing the last p2 coordinates.
class MonotoneSample {
public:
    MonotoneSample(Eigen::MatrixXd complete, Eigen::MatrixXd partial, int p1)
        : complete_(std::move(complete)), partial_(std::move(partial)), p1_(p1) {
        if (p1_ < 1 || p1_ > complete_.rows())
            throw InvalidDesign("sample: p1 must lie in [1, p]");
        if (partial_.cols() > 0 && partial_.rows() != p1_)
            throw InvalidDesign("sample: partial observations must have p1 coordinates");
        if (!complete_.allFinite() || !partial_.allFinite())
            throw DomainError("sample: non-finite entry");
    }

    const Eigen::MatrixXd& complete() const noexcept { return complete_; }
    const Eigen::MatrixXd& partial() const noexcept { return partial_; }
    int N1() const noexcept { return static_cast<int>(complete_.cols()); }
    int N2() const noexcept { return static_cast<int>(partial_.cols()); }
    int p1() const noexcept { return p1_; }
    int p2() const noexcept { return static_cast<int>(complete_.rows()) - p1_; }
    int p() const noexcept { return static_cast<int>(complete_.rows()); }

    /// Design of this sample; throws InvalidDesign when too small for the test.
    MonotoneDesign design() const { return {N1(), N2(), p1(), p2()}; }

private:
    Eigen::MatrixXd complete_;
    Eigen::MatrixXd partial_;
    int p1_;
};

/// Cross-product matrices of a monotone sample.
struct WMatrices {
    Eigen::MatrixXd W11_1;    // p1 x p1, complete block
    Eigen::MatrixXd W12_1;    // p1 x p2
    Eigen::MatrixXd W22_1;    // p2 x p2
    Eigen::MatrixXd W11_2;    // p1 x p1, partial block incl. mean-shift term
    Eigen::MatrixXd W22dot1;  // W22_1 - W21_1 (W11_1)^{-1} W12_1
};

/// The statistics lambda depends on, for A = W11_1 + W11_2, B = W22dot1,
/// C = W21_1 (W11_1)^{-1} W12_1.
struct WishartSummary {
    double logdet_A = 0.0;
    double tr_A = 0.0;
    double logdet_B = 0.0;
    double tr_B = 0.0;
    double tr_C = 0.0;
};

struct LikelihoodRatio {
    double log_lambda;  ///< log lambda <= 0
    double scaled;      ///< -(2/N) log lambda, the input of the standardized statistic
    double statistic;   ///< -2 log lambda
};

inline constexpr double kConditionCutoff = 1e12;

namespace detail {

inline double spd_logdet(const Eigen::MatrixXd& m, const char* name) {
    if (m.rows() == 0) return 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw DomainError(std::string("non-positive determinant for ") + name);
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace detail

/// Cross-product matrices of `sample`.
///
/// Throws SingularMatrixError when W11_1 has condition number above 1e12.
/// An identically zero W11_1 (no scatter) is accepted and yields
/// W22dot1 = W22_1.
inline WMatrices compute_w(const MonotoneSample& sample) {
    const int p1 = sample.p1();
    const int p2 = sample.p2();
    const int N1 = sample.N1();
    const int N2 = sample.N2();
    const int N = N1 + N2;
    if (N1 < 1) throw InvalidDesign("compute_w: need at least one complete observation");

    const Eigen::MatrixXd x1 = sample.complete().topRows(p1);
    const Eigen::MatrixXd x2 = sample.complete().bottomRows(p2);
    const Eigen::VectorXd mean1 = x1.rowwise().mean();
    const Eigen::VectorXd mean2 = x2.rowwise().mean();
    const Eigen::MatrixXd c1 = x1.colwise() - mean1;
    const Eigen::MatrixXd c2 = x2.colwise() - mean2;

    WMatrices w;
    w.W11_1 = c1 * c1.transpose();
    w.W12_1 = c1 * c2.transpose();
    w.W22_1 = c2 * c2.transpose();
    w.W11_2 = Eigen::MatrixXd::Zero(p1, p1);
    if (N2 > 0) {
        const Eigen::VectorXd mean_partial = sample.partial().rowwise().mean();
        const Eigen::MatrixXd cp = sample.partial().colwise() - mean_partial;
        const Eigen::VectorXd shift = mean1 - mean_partial;
        w.W11_2 = cp * cp.transpose() +
                  (static_cast<double>(N1) * N2 / N) * (shift * shift.transpose());
    }

    if (p2 == 0) {
        w.W22dot1 = Eigen::MatrixXd(0, 0);
        return w;
    }
    if (w.W11_1.isZero(0.0)) {
        w.W22dot1 = w.W22_1;
        return w;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w.W11_1, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kConditionCutoff)
        throw SingularMatrixError("W11 of the complete block is singular or ill-conditioned (p too close to N1?)");
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(w.W11_1);
    w.W22dot1 = w.W22_1 - w.W12_1.transpose() * ldlt.solve(w.W12_1);
    w.W22dot1 = 0.5 * (w.W22dot1 + w.W22dot1.transpose()).eval();
    return w;
}

/// As compute_w(sample), after checking that the sample has the shape of `d`.
inline WMatrices compute_w(const MonotoneSample& sample, const MonotoneDesign& d) {
    if (sample.N1() != d.N1() || sample.N2() != d.N2() || sample.p1() != d.p1() || sample.p2() != d.p2())
        throw InvalidDesign("compute_w: sample shape does not match " + d.to_string());
    return compute_w(sample);
}

/// Log-determinants and traces of A, B, C from the W matrices.
inline WishartSummary summarize(const WMatrices& w) {
    WishartSummary s;
    const Eigen::MatrixXd A = w.W11_1 + w.W11_2;
    s.logdet_A = detail::spd_logdet(A, "W11_1 + W11_2");
    s.tr_A = A.trace();
    if (w.W22dot1.rows() > 0) {
        s.logdet_B = detail::spd_logdet(w.W22dot1, "W22.1");
        s.tr_B = w.W22dot1.trace();
        s.tr_C = w.W22_1.trace() - s.tr_B;
    }
    return s;
}

/// log lambda = (N/2)[log|A| - p1 log N] + (N1/2)[log|B| - p2 log N1]
///              - ((Np1 + N1p2)/2) log[(tr A + tr B + tr C)/(Np1 + N1p2)].
inline LikelihoodRatio lr_lambda(const WishartSummary& s, const MonotoneDesign& d) {
    const double N = d.N();
    const double N1 = d.N1();
    const double weight = d.total_weight();
    const double total_trace = s.tr_A + s.tr_B + s.tr_C;
    if (!(total_trace > 0.0)) throw DomainError("lr_lambda: total trace must be positive");
    if (!std::isfinite(s.logdet_A) || !std::isfinite(s.logdet_B))
        throw DomainError("lr_lambda: non-positive determinant");

    double log_lambda = 0.5 * N * (s.logdet_A - d.p1() * std::log(N)) -
                        0.5 * weight * std::log(total_trace / weight);
    if (d.p2() > 0) log_lambda += 0.5 * N1 * (s.logdet_B - d.p2() * std::log(N1));
    return {log_lambda, -2.0 / N * log_lambda, -2.0 * log_lambda};
}

inline LikelihoodRatio lr_lambda(const WMatrices& w, const MonotoneDesign& d) { return lr_lambda(summarize(w), d); }

/// E[lambda^h] under H0, evaluated in log space.
inline double null_moment(double h, const MonotoneDesign& d) {
    if (h < 0.0) throw DomainError("null_moment: h must be non-negative");
    if (h == 0.0) return 1.0;
    const double N = d.N();
    const double N1 = d.N1();
    const int p1 = d.p1();
    const int p2 = d.p2();
    const double weight = d.total_weight();

    double log_m = h * (0.5 * weight * std::log(weight) - 0.5 * N * p1 * std::log(N) -
                        (p2 > 0 ? 0.5 * N1 * p2 * std::log(N1) : 0.0));
    for (int l = 1; l <= p1; ++l) {
        const double a = 0.5 * (N - p1 - 1 + l);
        log_m += std::lgamma(a + 0.5 * N * h) - std::lgamma(a);
    }
    for (int l = 1; l <= p2; ++l) {
        const double a = 0.5 * (N1 - d.p() - 1 + l);
        log_m += std::lgamma(a + 0.5 * N1 * h) - std::lgamma(a);
    }
    const double a = 0.5 * ((N - 1) * p1 + (N1 - 1) * p2);
    log_m += std::lgamma(a) - std::lgamma(a + 0.5 * weight * h);
    if (!std::isfinite(log_m)) throw DomainError("null_moment: log-moment overflow");
    return std::exp(log_m);
}

/// Draws WishartSummary values under H0 (Sigma = I) without forming matrices.
///
/// Under H0, A ~ W_p1(n, I), B ~ W_p2(n1 - p1, I), C ~ W_p2(p1, I), mutually
/// independent. Log-determinants come from the Bartlett diagonal
/// (chi-square with df - i + 1 degrees of freedom); each trace adds the
/// squared below-diagonal Bartlett normals, drawn in aggregate as one
/// chi-square with the matching count.
class SummarySampler {
public:
    explicit SummarySampler(const MonotoneDesign& d) : design_(d) {
        const int n = d.n();
        const int p1 = d.p1();
        const int p2 = d.p2();
        if (p2 > 0 && d.n1() - p1 < p2)
            throw InvalidDesign("summary sampler: need n1 - p1 >= p2 (" + d.to_string() + ")");
        for (int i = 1; i <= p1; ++i) diag_A_.emplace_back(0.5 * (n - i + 1), 2.0);
        for (int i = 1; i <= p2; ++i) diag_B_.emplace_back(0.5 * (d.n1() - p1 - i + 1), 2.0);
        if (p1 > 1) off_A_.emplace(0.25 * p1 * (p1 - 1), 2.0);
        if (p2 > 1) off_B_.emplace(0.25 * p2 * (p2 - 1), 2.0);
        if (p2 > 0) trace_C_.emplace(0.5 * p1 * p2, 2.0);
    }

    const MonotoneDesign& design() const noexcept { return design_; }

    WishartSummary operator()(Engine& engine) {
        WishartSummary s;
        for (auto& g : diag_A_) {
            const double c = g(engine);
            s.logdet_A += std::log(c);
            s.tr_A += c;
        }
        if (off_A_) s.tr_A += (*off_A_)(engine);
        for (auto& g : diag_B_) {
            const double c = g(engine);
            s.logdet_B += std::log(c);
            s.tr_B += c;
        }
        if (off_B_) s.tr_B += (*off_B_)(engine);
        if (trace_C_) s.tr_C = (*trace_C_)(engine);
        return s;
    }

private:
    using Gamma = std::gamma_distribution<double>;
    MonotoneDesign design_;
    std::vector<Gamma> diag_A_;
    std::vector<Gamma> diag_B_;
    std::optional<Gamma> off_A_;
    std::optional<Gamma> off_B_;
    std::optional<Gamma> trace_C_;
};

inline WishartSummary sample_summary(const MonotoneDesign& d, Engine& engine) {
    SummarySampler sampler(d);
    return sampler(engine);
}

/// i.i.d. N(0, sigma2 I) observations with the monotone pattern of `d`.
inline MonotoneSample sample_raw(const MonotoneDesign& d, double sigma2, Engine& engine) {
    if (!(sigma2 > 0.0)) throw DomainError("sample_raw: sigma2 must be positive");
    std::normal_distribution<double> z(0.0, 1.0);
    const double scale = std::sqrt(sigma2);
    Eigen::MatrixXd complete(d.p(), d.N1());
    for (Eigen::Index j = 0; j < complete.cols(); ++j)
        for (Eigen::Index i = 0; i < complete.rows(); ++i) complete(i, j) = scale * z(engine);
    Eigen::MatrixXd partial(d.p1(), d.N2());
    for (Eigen::Index j = 0; j < partial.cols(); ++j)
        for (Eigen::Index i = 0; i < partial.rows(); ++i) partial(i, j) = scale * z(engine);
    return {std::move(complete), std::move(partial), d.p1()};
}

}  // namespace sphericity
