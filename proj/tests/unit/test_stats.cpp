#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "gamdvqr/optimize.hpp"
#include "gamdvqr/stats.hpp"
#include "oracles.hpp"

using namespace gamdvqr;

TEST(Normal, MatchesErfc) {
    for (double z : {-6.0, -1.3, 0.0, 0.4, 2.2, 7.0}) {
        EXPECT_NEAR(norm_cdf(z), oracle::Phi(z), 1e-15);
        EXPECT_NEAR(norm_pdf(z), oracle::phi(z), 1e-15);
    }
    for (double p : {1e-9, 0.01, 0.3, 0.5, 0.77, 0.999}) EXPECT_NEAR(norm_cdf(norm_quantile(p)), p, 1e-14);
    EXPECT_EQ(norm_quantile(1.0), std::numeric_limits<double>::infinity());
    EXPECT_EQ(norm_quantile(0.0), -std::numeric_limits<double>::infinity());
    EXPECT_THROW(norm_quantile(1.5), DomainError);
}

TEST(StudentT, CdfIntegratesPdf) {
    for (double df : {3.0, 5.5, 20.0}) {
        const double x = 1.3;
        const double integral = 0.5 + oracle::simpson([df](double t) { return t_pdf(t, df); }, 0.0, x, 2000);
        EXPECT_NEAR(t_cdf(x, df), integral, 1e-10);
        EXPECT_NEAR(t_quantile(t_cdf(x, df), df), x, 1e-10);
    }
}

TEST(Moments, Basic) {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    EXPECT_DOUBLE_EQ(mean(x), 2.5);
    EXPECT_NEAR(sample_sd(x), std::sqrt(5.0 / 3.0), 1e-15);
    EXPECT_DOUBLE_EQ(empirical_quantile(x, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(empirical_quantile(x, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(empirical_quantile(x, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(empirical_quantile(x, 1.0 / 3.0), 2.0);
}

TEST(Kendall, MatchesPairwiseCount) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<double> x(700), y(700);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = g(rng);
        y[i] = 0.6 * x[i] + g(rng);
    }
    EXPECT_NEAR(kendall_tau(x, y), oracle::kendall_tau_pairs(x, y), 1e-12);
    std::vector<double> t1{1, 1, 2, 3}, t2{1, 2, 2, 3};
    // tau-b with ties: concordant 4, discordant 0, ties 1 in each.
    EXPECT_NEAR(kendall_tau(t1, t2), 4.0 / 5.0, 1e-12);
}

TEST(Bisection, SolvesAndReportsFailure) {
    const double r = bisect_increasing([](double x) { return x * x * x; }, 8.0, 0.0, 5.0, 1e-13);
    EXPECT_NEAR(r, 2.0, 1e-12);
    EXPECT_THROW(bisect_increasing([](double x) { return x; }, 0.3, 0.0, 1.0, 1e-30, 5), ConvergenceError);
}

TEST(ChiSquare, UpperTail) {
    EXPECT_NEAR(chi2_sf(3.841458820694124, 1.0), 0.05, 1e-12);
    EXPECT_DOUBLE_EQ(chi2_sf(0.0, 4.0), 1.0);
}

TEST(Hash, Fnv1a) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Bfgs, Rosenbrock) {
    auto f = [](std::span<const double> x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    const auto res = minimize_bfgs(f, {-1.2, 1.0}, {2000, 1e-8, 0.0, 1e-7});
    EXPECT_TRUE(res.converged) << res.message;
    EXPECT_NEAR(res.x[0], 1.0, 1e-5);
    EXPECT_NEAR(res.x[1], 1.0, 1e-5);
    EXPECT_THROW(minimize_bfgs([](std::span<const double>) { return NAN; }, {0.0}), ConvergenceError);
}

TEST(Bfgs, AnalyticGradientAndHessian) {
    auto f = [](std::span<const double> x) { return 2.0 * x[0] * x[0] + x[0] * x[1] + x[1] * x[1] - x[1]; };
    auto g = [](std::span<const double> x, std::span<double> out) {
        out[0] = 4.0 * x[0] + x[1];
        out[1] = x[0] + 2.0 * x[1] - 1.0;
    };
    const auto res = minimize_bfgs(f, {3.0, -2.0}, {}, g);
    // Gradient tolerance 1e-6 with Hessian eigenvalues >= 1.38 bounds the error near 1e-6.
    EXPECT_NEAR(res.x[0], -1.0 / 7.0, 2e-6);
    EXPECT_NEAR(res.x[1], 4.0 / 7.0, 2e-6);
    const auto h = numerical_hessian(f, res.x, 1e-4);
    EXPECT_NEAR(h(0, 0), 4.0, 1e-6);
    EXPECT_NEAR(h(0, 1), 1.0, 1e-6);
    EXPECT_NEAR(h(1, 1), 2.0, 1e-6);
}
