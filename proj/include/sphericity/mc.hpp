#pragma once

// Seeded Monte Carlo experiments under H0: empirical distribution of T,
// sup-distance to the Edgeworth expansion, and empirical Type I error rates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sphericity/classical.hpp"
#include "sphericity/cumulants.hpp"
#include "sphericity/design.hpp"
#include "sphericity/edgeworth.hpp"
#include "sphericity/errors.hpp"
#include "sphericity/model.hpp"
#include "sphericity/rng.hpp"
#include "sphericity/specfun.hpp"

namespace sphericity {

enum class SamplerKind { summary, raw };

inline std::string to_string(SamplerKind k) { return k == SamplerKind::summary ? "summary" : "raw"; }

inline SamplerKind parse_sampler(const std::string& s) {
    if (s == "summary") return SamplerKind::summary;
    if (s == "raw") return SamplerKind::raw;
    throw DomainError("unknown sampler '" + s + "' (expected summary or raw)");
}

inline constexpr std::size_t kMinReps = 1000;
/// Replications per RNG substream. Block b always uses substream b, so the
/// draws do not depend on how blocks are spread over workers.
inline constexpr std::size_t kBlockSize = 8192;

struct ExperimentPlan {
    MonotoneDesign design;
    std::size_t reps = 1'000'000;
    std::uint64_t seed = 0;
    SamplerKind sampler = SamplerKind::summary;
    std::vector<double> alphas{0.10, 0.05, 0.01};
    int order = 2;
    unsigned threads = 1;

    void validate() const {
        if (reps < kMinReps) throw DomainError("plan: reps must be at least " + std::to_string(kMinReps));
        for (double a : alphas)
            if (!(a > 0.0 && a < 1.0)) throw DomainError("plan: alpha must lie in (0, 1)");
        if (order < 1) throw DomainError("plan: expansion order must be >= 1");
    }
};

struct AlphaResult {
    double alpha = 0.0;
    std::uint64_t rejections = 0;
    double alpha1 = 0.0;     ///< empirical Pr(-2 log lambda > chi2_f(alpha))
    double alpha1_se = 0.0;  ///< binomial standard error
    double a_prop = 0.0;
    double a_sys = 0.0;
    double b_prop = 0.0;
    double b_sys = 0.0;
};

struct ExperimentResult {
    double mae = 0.0;
    std::vector<AlphaResult> per_alpha;
    double mean_T = 0.0;
    double mean_T_se = 0.0;
    double var_T = 0.0;
    double var_T_se = 0.0;
    std::vector<std::pair<double, double>> quantiles;  ///< (level, empirical quantile of T)
    std::size_t rep_count = 0;
    std::uint64_t seed = 0;
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double m = 0.0;
};

/// Draws of -(2/N) log lambda under H0 (sigma^2 = 1), in block order.
inline std::vector<double> simulate_scaled(const ExperimentPlan& plan) {
    plan.validate();
    const auto& d = plan.design;
    std::vector<double> out(plan.reps);
    const std::size_t blocks = (plan.reps + kBlockSize - 1) / kBlockSize;

    auto run_block = [&](std::size_t b) {
        auto engine = make_engine(plan.seed, b);
        const std::size_t begin = b * kBlockSize;
        const std::size_t end = std::min(plan.reps, begin + kBlockSize);
        if (plan.sampler == SamplerKind::summary) {
            SummarySampler sampler(d);
            for (std::size_t i = begin; i < end; ++i) out[i] = lr_lambda(sampler(engine), d).scaled;
        } else {
            for (std::size_t i = begin; i < end; ++i)
                out[i] = lr_lambda(compute_w(sample_raw(d, 1.0, engine)), d).scaled;
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(plan.threads, static_cast<unsigned>(blocks)));
    if (workers == 1) {
        for (std::size_t b = 0; b < blocks; ++b) run_block(b);
        return out;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t b = w; b < blocks; b += workers) run_block(b);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

/// Exact sup-distance between the empirical CDF of `sorted` (ascending) and a
/// continuous CDF: max_i max(|i/R - F(t_i)|, |(i-1)/R - F(t_i)|).
inline double empirical_sup_distance(const std::vector<double>& sorted, const std::function<double(double)>& cdf) {
    const double R = static_cast<double>(sorted.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double F = cdf(sorted[i]);
        worst = std::max({worst, std::fabs((i + 1) / R - F), std::fabs(i / R - F)});
    }
    return worst;
}

inline const std::vector<double>& digest_levels() {
    static const std::vector<double> levels{0.001, 0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99, 0.999};
    return levels;
}

/// Runs one experiment: MAE against Q_s, Type I error per alpha with biases,
/// and moment diagnostics of T.
inline ExperimentResult run_experiment(const ExperimentPlan& plan) {
    const auto& d = plan.design;
    const auto scaled = simulate_scaled(plan);
    const auto cs = cumulant_set(d, std::max(kDefaultCumulantOrder, plan.order + 2));
    const EdgeworthExpansion ex(cs, plan.order);
    const double R = static_cast<double>(scaled.size());

    ExperimentResult res;
    res.rep_count = scaled.size();
    res.seed = plan.seed;
    res.kappa1 = cs.kappa1();
    res.kappa2 = cs.kappa2();
    res.m = cs.m;

    for (double alpha : plan.alphas) {
        AlphaResult ar;
        ar.alpha = alpha;
        const double crit = specfun::chi2_quantile(alpha, d.chi2_dof());
        for (double s : scaled)
            if (d.N() * s > crit) ++ar.rejections;
        ar.alpha1 = ar.rejections / R;
        ar.alpha1_se = std::sqrt(ar.alpha1 * (1.0 - ar.alpha1) / R);
        ar.a_prop = 1.0 - ex.cdf(q_alpha(alpha, d, cs));
        ar.a_sys = a_sys(d, alpha);
        ar.b_prop = ar.alpha1 - ar.a_prop;
        ar.b_sys = ar.alpha1 - ar.a_sys;
        res.per_alpha.push_back(ar);
    }

    std::vector<double> T(scaled.size());
    std::transform(scaled.begin(), scaled.end(), T.begin(), [&](double s) { return standardize(s, cs); });

    double mean = 0.0;
    for (double t : T) mean += t;
    mean /= R;
    double m2 = 0.0, m4 = 0.0;
    for (double t : T) {
        const double dev = (t - mean) * (t - mean);
        m2 += dev;
        m4 += dev * dev;
    }
    m2 /= R;
    m4 /= R;
    res.mean_T = mean;
    res.mean_T_se = std::sqrt(m2 / R);
    res.var_T = m2 * R / (R - 1.0);
    res.var_T_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / R);

    std::sort(T.begin(), T.end());
    res.mae = empirical_sup_distance(T, [&](double x) { return ex.cdf(x); });
    for (double level : digest_levels()) {
        const auto idx = static_cast<std::size_t>(std::min(R - 1.0, std::floor(level * R)));
        res.quantiles.emplace_back(level, T[idx]);
    }
    return res;
}

inline ExperimentResult run_mae(const ExperimentPlan& plan) { return run_experiment(plan); }
inline ExperimentResult run_type1(const ExperimentPlan& plan) { return run_experiment(plan); }

}  // namespace sphericity
