#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "sphericity/cumulants.hpp"
#include "sphericity/design.hpp"
#include "sphericity/errors.hpp"
#include "sphericity/model.hpp"
#include "sphericity/rng.hpp"

using namespace sphericity;

namespace {

double round_to(double x, int digits) {
    const double s = std::pow(10.0, digits);
    return std::round(x * s) / s;
}

// Cumulants of -(2/N) log lambda by differentiating the log of the null
// moment function E[lambda^h] at h = -2u/N term by term in u.
double cumulant_from_moments(int s, const MonotoneDesign& d) {
    const double N = d.N(), N1 = d.N1(), tau = N1 / N;
    const int p1 = d.p1(), p2 = d.p2();
    const double weight = d.total_weight();
    // log E[e^{uY}] = u * L + sum lgamma(a_l - u) + sum lgamma(b_l - tau u) - lgamma(A - c u) + const
    const double c = weight / N;
    const double L = (p2 > 0 ? N1 / N * p2 * std::log(N1) : 0.0) + p1 * std::log(N) - c * std::log(weight);
    auto dlgamma = [&](double x, double scale) {
        // d^s/du^s lgamma(x - scale u) at u = 0
        return std::pow(-scale, s) * specfun::polygamma(s - 1, x);
    };
    double k = s == 1 ? L : 0.0;
    for (int l = 1; l <= p1; ++l) k += dlgamma(0.5 * (N - p1 - 1 + l), 1.0);
    for (int l = 1; l <= p2; ++l) k += dlgamma(0.5 * (N1 - d.p() - 1 + l), tau);
    k -= dlgamma(0.5 * ((N - 1) * p1 + (N1 - 1) * p2), c);
    return k;
}

std::vector<MonotoneDesign> sandwich_grid() {
    std::vector<MonotoneDesign> g;
    for (auto [n, n1] : {std::pair{30, 20}, {60, 40}, {120, 80}, {500, 400}})
        for (auto [p1, p2] : {std::pair{2, 2}, {5, 5}, {3, 12}, {12, 3}, {1, 1}}) {
            if (n1 - (p1 + p2) < 4) continue;
            g.push_back(MonotoneDesign::from_n(n, n1, p1, p2));
        }
    g.push_back(MonotoneDesign::complete(30, 4));
    g.push_back(MonotoneDesign::from_n(1000, 800, 400, 200));
    return g;
}

}  // namespace

TEST(Cumulants, PrintedKappa2AndM) {
    const auto t1 = cumulant_set(MonotoneDesign::from_n(60, 40, 5, 5));
    EXPECT_DOUBLE_EQ(round_to(t1.kappa2(), 3), 0.037);
    EXPECT_DOUBLE_EQ(round_to(t1.m, 2), 2.83);
    const auto t4 = cumulant_set(MonotoneDesign::from_n(50, 40, 20, 10));
    EXPECT_DOUBLE_EQ(round_to(t4.kappa2(), 3), 0.838);
    EXPECT_DOUBLE_EQ(round_to(t4.m, 2), 4.35);
}

TEST(Cumulants, MatchMomentFunctionDerivatives) {
    for (const auto& d : {MonotoneDesign(20, 10, 2, 2), MonotoneDesign::from_n(60, 40, 5, 5),
                          MonotoneDesign::from_n(50, 40, 20, 10), MonotoneDesign::complete(12, 3)}) {
        const auto cs = cumulant_set(d, 10);
        for (int s = 1; s <= 10; ++s) {
            const double oracle = cumulant_from_moments(s, d);
            EXPECT_NEAR(cs.kappa[s], oracle, 1e-9 * std::fabs(oracle) + 1e-15) << d.to_string() << " s=" << s;
        }
    }
}

TEST(Cumulants, MeanMatchesFiniteDifferenceOfNullMoment) {
    const MonotoneDesign d(20, 10, 2, 2);
    // E[log lambda] = d/dh log E[lambda^h] at h = 0, one-sided second-order difference.
    const double h = 1e-4;
    const double slope = (4.0 * std::log(null_moment(h, d)) - std::log(null_moment(2 * h, d))) / (2 * h);
    EXPECT_NEAR(cumulant_set(d).kappa1(), -2.0 / d.N() * slope, 1e-7);
}

TEST(Cumulants, MonteCarloMeanAndVariance) {
    const MonotoneDesign d(20, 10, 2, 2);
    const auto cs = cumulant_set(d);
    auto engine = make_engine(17, 0);
    SummarySampler sampler(d);
    constexpr int R = 100'000;
    double sum = 0.0, sum2 = 0.0;
    std::vector<double> x(R);
    for (auto& v : x) {
        v = standardize(lr_lambda(sampler(engine), d).scaled, cs);
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / R;
    const double var = sum2 / R - mean * mean;
    double m4 = 0.0;
    for (double v : x) m4 += std::pow(v - mean, 4);
    m4 /= R;
    EXPECT_NEAR(mean, 0.0, 4.0 * std::sqrt(var / R));
    EXPECT_NEAR(var, 1.0, 4.0 * std::sqrt((m4 - var * var) / R));
}

TEST(Cumulants, StandardizedAndDerivedQuantities) {
    const auto d = MonotoneDesign::from_n(60, 40, 5, 5);
    const auto cs = cumulant_set(d, 8);
    for (int s = 3; s <= 8; ++s) EXPECT_NEAR(cs.ktilde[s], cs.kappa[s] / std::pow(cs.kappa2(), 0.5 * s), 1e-15);
    EXPECT_DOUBLE_EQ(cs.m0, 0.5 * (40 - 10 - 0.5));
    EXPECT_NEAR(cs.m, cs.m0 * std::sqrt(cs.kappa2()), 1e-15);
    EXPECT_DOUBLE_EQ(standardize(cs.kappa1(), cs), 0.0);
    EXPECT_NEAR(standardize(cs.kappa1() + std::sqrt(cs.kappa2()), cs), 1.0, 1e-14);
}

TEST(Cumulants, OrderLimits) {
    const MonotoneDesign d(20, 10, 2, 2);
    EXPECT_THROW(cumulant_set(d, 1), DomainError);
    EXPECT_THROW(cumulant_set(d, 11), DomainError);
    EXPECT_NO_THROW(cumulant_set(d, 10));
    EXPECT_THROW(gamma_table(cumulant_set(d, 4), 3), DomainError);
}

TEST(Lemma1, SandwichOnDesignGrid) {
    const auto grid = sandwich_grid();
    ASSERT_GE(grid.size(), 20u);
    for (const auto& d : grid) {
        const auto cs = cumulant_set(d, 10);
        for (int s = 3; s <= 10; ++s) {
            const double mid = cs.ktilde[s] / specfun::detail::factorial(s);
            const double upper = std::pow(cs.m, -(s - 2.0)) * lemma1_b(s - 3, d, cs);
            EXPECT_GT(mid, 0.0) << d.to_string() << " s=" << s;
            EXPECT_LT(mid, upper) << d.to_string() << " s=" << s;
        }
    }
}

TEST(BigB, ClosedFormMatchesSeries) {
    for (const auto& d : {MonotoneDesign::from_n(60, 40, 5, 5), MonotoneDesign::from_n(60, 50, 15, 15),
                          MonotoneDesign::from_n(120, 80, 10, 5), MonotoneDesign::from_n(50, 40, 20, 10),
                          MonotoneDesign::from_n(1000, 800, 400, 200)}) {
        const auto cs = cumulant_set(d);
        std::vector<double> b(60);
        for (int s = 0; s < 60; ++s) b[s] = lemma1_b(s, d, cs);
        for (int i = 1; i <= 19; ++i) {
            const double v = 0.05 * i;
            long double series = 0.0L;
            for (int s = 59; s >= 0; --s) series = series * v + b[s];
            const double closed = big_B(v, d, cs);
            EXPECT_LT(std::fabs(closed - static_cast<double>(series)), 1e-9 * std::fabs(closed))
                << d.to_string() << " v=" << v;
        }
        EXPECT_DOUBLE_EQ(big_B(0.0, d, cs), lemma1_b(0, d, cs));
        EXPECT_THROW(big_B(1.0, d, cs), DomainError);
    }
}

TEST(BigB, CvAtPrintedMinimizer) {
    const auto d = MonotoneDesign::from_n(60, 40, 5, 5);
    const auto cs = cumulant_set(d);
    EXPECT_DOUBLE_EQ(round_to(c_v(0.85, d, cs), 2), 0.50);
    EXPECT_DOUBLE_EQ(round_to(c_v(0.95, d, cs), 2), 0.39);
}

TEST(LFunctions, ContinuousAcrossSeriesCutoff) {
    for (auto* L : {&L1, &L2, &L3}) {
        const double below = (*L)(std::nextafter(detail::kLSeriesCutoff, 0.0));
        const double above = (*L)(detail::kLSeriesCutoff);
        EXPECT_NEAR(below, above, 1e-14 * std::max(1.0, std::fabs(above)));
        const double nb = (*L)(-std::nextafter(detail::kLSeriesCutoff, 0.0));
        const double na = (*L)(-detail::kLSeriesCutoff);
        EXPECT_NEAR(nb, na, 1e-14 * std::max(1.0, std::fabs(na)));
        EXPECT_THROW((*L)(1.0), DomainError);
        EXPECT_THROW((*L)(-1.0), DomainError);
    }
}

TEST(LFunctions, MatchDefiningSeries) {
    for (double x : {-0.9, -0.5, -0.19, -0.01, 0.001, 0.15, 0.21, 0.5, 0.75, 0.9}) {
        long double s1 = 0, s2 = 0, s3 = 0, power = x;
        for (int s = 0; s < 3000; ++s, power *= x) {
            s1 += power / ((s + 1.0L) * (s + 2.0L) * (s + 3.0L));
            s2 += power / (s + 3.0L);
            s3 += power / ((s + 2.0L) * (s + 3.0L));
        }
        EXPECT_NEAR(L1(x), static_cast<double>(s1), 1e-13 * std::fabs(static_cast<double>(s1))) << x;
        EXPECT_NEAR(L2(x), static_cast<double>(s2), 1e-13 * std::fabs(static_cast<double>(s2))) << x;
        EXPECT_NEAR(L3(x), static_cast<double>(s3), 1e-13 * std::fabs(static_cast<double>(s3))) << x;
    }
}

TEST(Compositions, MatchBruteForceEnumeration) {
    const std::vector<double> e{0.3, -1.2, 0.7, 2.1};
    const int max_power = 4, order = 5;
    const auto sums = composition_sums(e, max_power, order);
    for (int k = 0; k <= max_power; ++k)
        for (int j = 0; j <= order; ++j) {
            double brute = 0.0;
            std::function<void(int, int, double)> rec = [&](int left, int remaining, double prod) {
                if (left == 0) {
                    if (remaining == 0) brute += prod;
                    return;
                }
                for (int i = 0; i <= remaining && i < static_cast<int>(e.size()); ++i)
                    rec(left - 1, remaining - i, prod * e[i]);
            };
            rec(k, j, 1.0);
            EXPECT_NEAR(sums[k][j], brute, 1e-13) << "k=" << k << " j=" << j;
        }
}

TEST(GammaTable, LowOrderEntries) {
    const auto cs = cumulant_set(MonotoneDesign::from_n(60, 40, 5, 5));
    const auto g = gamma_table(cs, 2);
    const double g10 = cs.ktilde[3] / 6.0;
    EXPECT_NEAR(g(1, 0), g10, 1e-16);
    EXPECT_NEAR(g(1, 1), cs.ktilde[4] / 24.0, 1e-16);
    EXPECT_NEAR(g(2, 0), g10 * g10, 1e-16);
    EXPECT_THROW(g(2, 1), std::out_of_range);
    const auto g4 = gamma_table(cs, 4);
    EXPECT_NEAR(g4(2, 1), 2.0 * g10 * cs.ktilde[4] / 24.0, 1e-16);
    EXPECT_NEAR(g4(3, 0), g10 * g10 * g10, 1e-16);
}
