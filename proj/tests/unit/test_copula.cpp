#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gamdvqr/copula.hpp"
#include "gamdvqr/stats.hpp"
#include "oracles.hpp"

using namespace gamdvqr;

namespace {

struct Case {
    CopulaFamily family;
    double tau;
};

std::vector<Case> family_cases() {
    return {
        {CopulaFamily::gaussian(), 0.5},       {CopulaFamily::gaussian(), -0.3},
        {CopulaFamily::student_t(5), 0.4},     {CopulaFamily::student_t(3), -0.5},
        {CopulaFamily::clayton(), 0.5},        {CopulaFamily::clayton(Rotation::R180), 0.3},
        {CopulaFamily::clayton(Rotation::R90), -0.4}, {CopulaFamily::clayton(Rotation::R270), -0.6},
        {CopulaFamily::gumbel(), 0.5},         {CopulaFamily::gumbel(Rotation::R180), 0.2},
        {CopulaFamily::gumbel(Rotation::R90), -0.4},  {CopulaFamily::gumbel(Rotation::R270), -0.3},
        {CopulaFamily::frank(), 0.5},          {CopulaFamily::frank(), -0.6},
    };
}

std::vector<double> interior_grid(std::size_t n) {
    std::vector<double> g;
    for (std::size_t i = 1; i <= n; ++i) g.push_back(static_cast<double>(i) / static_cast<double>(n + 1));
    return g;
}

}  // namespace

TEST(TauParam, TableExamples) {
    EXPECT_DOUBLE_EQ(tau_to_param(CopulaFamily::gaussian(), 0.0), 0.0);
    EXPECT_NEAR(tau_to_param(CopulaFamily::gaussian(), 0.5), std::sin(oracle::kPi / 4.0), 1e-12);
    EXPECT_NEAR(tau_to_param(CopulaFamily::gumbel(), 0.5), 2.0, 1e-12);
    EXPECT_NEAR(tau_to_param(CopulaFamily::clayton(Rotation::R90), -0.5), -2.0, 1e-12);
    EXPECT_NEAR(param_to_tau(CopulaFamily::gaussian(), 0.707107), 0.5, 1e-6);
    EXPECT_NEAR(param_to_tau(CopulaFamily::clayton(), 2.0), 0.5, 1e-12);
    EXPECT_NEAR(param_to_tau(CopulaFamily::frank(), 1e-8), 0.0, 1e-8);
}

TEST(TauParam, OutOfRangeThrows) {
    EXPECT_THROW(tau_to_param(CopulaFamily::gumbel(), -0.2), DomainError);
    EXPECT_THROW(tau_to_param(CopulaFamily::clayton(Rotation::R90), 0.2), DomainError);
    EXPECT_THROW(tau_to_param(CopulaFamily::gaussian(), 1.0), DomainError);
    EXPECT_THROW(param_to_tau(CopulaFamily::gumbel(), 0.5), DomainError);
    EXPECT_THROW(param_to_tau(CopulaFamily::gaussian(), 1.5), DomainError);
}

TEST(TauParam, FrankMatchesDebyeRelation) {
    // tau = 1 - 4/eta (1 - D1(eta)) with D1 by Simpson quadrature.
    for (double eta : {0.5, 2.0, 7.0, 20.0}) {
        const double d1 = oracle::simpson([](double t) { return t < 1e-12 ? 1.0 : t / std::expm1(t); }, 0.0, eta, 4000) / eta;
        EXPECT_NEAR(param_to_tau(CopulaFamily::frank(), eta), 1.0 - 4.0 / eta * (1.0 - d1), 1e-10);
        EXPECT_NEAR(debye1(eta), d1, 1e-11);
    }
}

TEST(CopulaCdf, Examples) {
    EXPECT_DOUBLE_EQ(copula_cdf(CopulaFamily::independence(), 0.0, 0.3, 0.4), 0.12);
    EXPECT_NEAR(copula_cdf(CopulaFamily::gaussian(), 0.707107, 0.5, 0.5), oracle::normal_orthant(0.707107), 1e-9);
    EXPECT_NEAR(copula_cdf(CopulaFamily::gaussian(), 0.707107, 0.5, 0.5), 0.375, 1e-6);
    EXPECT_NEAR(copula_cdf(CopulaFamily::gumbel(), 2.0, 0.5, 0.5), std::exp(-std::log(2.0) * std::sqrt(2.0)), 1e-12);
}

TEST(CopulaCdf, MatchesDirectFormulas) {
    for (double u : interior_grid(5)) {
        for (double v : interior_grid(5)) {
            EXPECT_NEAR(copula_cdf(CopulaFamily::gumbel(), 1.7, u, v), oracle::gumbel_cdf(1.7, u, v), 1e-12);
            EXPECT_NEAR(copula_cdf(CopulaFamily::clayton(), 2.5, u, v), oracle::clayton_cdf(2.5, u, v), 1e-12);
            // 180 deg: survival copula.
            EXPECT_NEAR(copula_cdf(CopulaFamily::gumbel(Rotation::R180), 1.7, u, v),
                        u + v - 1.0 + oracle::gumbel_cdf(1.7, 1.0 - u, 1.0 - v), 1e-12);
            // 90 deg: v - C0(1-u, v) with the unrotated parameter -eta.
            EXPECT_NEAR(copula_cdf(CopulaFamily::clayton(Rotation::R90), -2.5, u, v),
                        v - oracle::clayton_cdf(2.5, 1.0 - u, v), 1e-12);
            EXPECT_NEAR(copula_cdf(CopulaFamily::clayton(Rotation::R270), -2.5, u, v),
                        u - oracle::clayton_cdf(2.5, u, 1.0 - v), 1e-12);
        }
    }
}

TEST(CopulaCdf, FrechetBounds) {
    for (const auto& c : family_cases()) {
        const double eta = tau_to_param(c.family, c.tau);
        for (double u : interior_grid(9)) {
            for (double v : interior_grid(9)) {
                const double C = copula_cdf(c.family, eta, u, v);
                EXPECT_GE(C, std::max(0.0, u + v - 1.0) - 1e-9) << c.family.name();
                EXPECT_LE(C, std::min(u, v) + 1e-9) << c.family.name();
            }
        }
    }
}

TEST(CopulaCdf, RejectsOutsideUnitSquare) {
    EXPECT_THROW(copula_cdf(CopulaFamily::gaussian(), 0.3, -0.1, 0.5), DomainError);
    EXPECT_THROW(copula_pdf(CopulaFamily::gaussian(), 0.3, 0.5, 1.2), DomainError);
    EXPECT_THROW(hfunc(CopulaFamily::gaussian(), 0.3, CondOn::Second, 0.5, 1.2), DomainError);
}

TEST(CopulaPdf, Examples) {
    EXPECT_DOUBLE_EQ(copula_pdf(CopulaFamily::independence(), 0.0, 0.3, 0.8), 1.0);
    EXPECT_NEAR(copula_pdf(CopulaFamily::gaussian(), 0.0, 0.2, 0.9), 1.0, 1e-12);
    EXPECT_NEAR(copula_pdf(CopulaFamily::gaussian(), 0.5, 0.5, 0.5), 1.0 / std::sqrt(0.75), 1e-9);
    for (double u : interior_grid(4)) {
        for (double v : interior_grid(4)) {
            EXPECT_NEAR(copula_pdf(CopulaFamily::gaussian(), 0.6, u, v), oracle::gaussian_copula_density(u, v, 0.6), 1e-9);
        }
    }
}

TEST(CopulaPdf, MixedPartialOfCdf) {
    // c = d2C/dudv by central differences.
    const double h = 1e-4;
    for (const auto& c : family_cases()) {
        const double eta = tau_to_param(c.family, c.tau);
        for (double u : {0.25, 0.5, 0.8}) {
            for (double v : {0.3, 0.6}) {
                const double fd = (copula_cdf(c.family, eta, u + h, v + h) - copula_cdf(c.family, eta, u + h, v - h) -
                                   copula_cdf(c.family, eta, u - h, v + h) + copula_cdf(c.family, eta, u - h, v - h)) /
                                  (4.0 * h * h);
                const double pdf = copula_pdf(c.family, eta, u, v);
                EXPECT_NEAR(pdf, fd, 2e-3 * std::max(1.0, pdf)) << c.family.name() << " u=" << u << " v=" << v;
                EXPECT_NEAR(std::log(pdf), copula_log_pdf(c.family, eta, u, v), 1e-9);
            }
        }
    }
}

TEST(Hfunc, Examples) {
    EXPECT_NEAR(hfunc(CopulaFamily::independence(), 0.0, CondOn::Second, 0.3, 0.7), 0.3, 1e-15);
    EXPECT_NEAR(hfunc(CopulaFamily::gaussian(), 0.5, CondOn::Second, 0.5, 0.5), 0.5, 1e-12);
    EXPECT_NEAR(hfunc(CopulaFamily::gaussian(), 0.5, CondOn::Second, 0.9, 0.5),
                oracle::Phi(oracle::Phi_inv(0.9) / std::sqrt(0.75)), 1e-9);
    // The printed example rounds the normal argument, hence the looser bound.
    EXPECT_NEAR(hfunc(CopulaFamily::gaussian(), 0.5, CondOn::Second, 0.9, 0.5), 0.93056, 5e-5);
    EXPECT_NEAR(hfunc_inv(CopulaFamily::gaussian(), 0.5, CondOn::Second, 0.93056, 0.5), 0.9, 5e-5);
    EXPECT_NEAR(hfunc_inv(CopulaFamily::gaussian(), 0.5, CondOn::Second,
                          oracle::Phi(oracle::Phi_inv(0.9) / std::sqrt(0.75)), 0.5),
                0.9, 1e-9);
    EXPECT_NEAR(hfunc_inv(CopulaFamily::independence(), 0.0, CondOn::Second, 0.37, 0.2), 0.37, 1e-15);
}

TEST(Pdf, IntegratesToOne) {
    // Normal scores make the tail-dependent corners smooth, so Simpson is accurate there.
    for (const auto& c : family_cases()) {
        const double eta = tau_to_param(c.family, c.tau);
        const double mass = oracle::simpson(
            [&](double a) {
                return oracle::simpson(
                    [&](double b) {
                        return copula_pdf(c.family, eta, oracle::Phi(a), oracle::Phi(b)) * oracle::phi(a) * oracle::phi(b);
                    },
                    -8.5, 8.5, 300);
            },
            -8.5, 8.5, 300);
        EXPECT_NEAR(mass, 1.0, 1e-8) << c.family.name() << " tau " << c.tau;
    }
    // 200x200 midpoint rule on the unit square at moderate dependence.
    for (const auto& c : family_cases()) {
        const double tau = c.tau > 0.0 ? 0.3 : -0.3;
        const double eta = tau_to_param(c.family, tau);
        const double mass =
            oracle::midpoint_unit_square([&](double u, double v) { return copula_pdf(c.family, eta, u, v); }, 200);
        EXPECT_NEAR(mass, 1.0, 1e-3) << c.family.name() << " tau " << tau;
    }
}

TEST(Hfunc, IntegratesDensity) {
    // h(u|v) = int_0^u c(s, v) ds.
    for (const auto& c : family_cases()) {
        const double eta = tau_to_param(c.family, c.tau);
        for (double u : {0.2, 0.6}) {
            for (double v : {0.35, 0.7}) {
                const double integral =
                    oracle::simpson([&](double s) { return copula_pdf(c.family, eta, std::max(s, 1e-12), v); }, 0.0, u, 4000);
                EXPECT_NEAR(hfunc(c.family, eta, CondOn::Second, u, v), integral, 2e-4) << c.family.name();
            }
        }
    }
}

TEST(Hfunc, MonotoneAndInvertible) {
    for (const auto& c : family_cases()) {
        const double eta = tau_to_param(c.family, c.tau);
        for (double w : interior_grid(9)) {
            double prev = -1.0;
            for (double x : interior_grid(9)) {
                const double h2 = hfunc(c.family, eta, CondOn::Second, x, w);
                EXPECT_GE(h2, prev) << c.family.name();
                prev = h2;
                EXPECT_NEAR(hfunc_inv(c.family, eta, CondOn::Second, h2, w), x, 1e-9) << c.family.name();
                const double h1 = hfunc(c.family, eta, CondOn::First, w, x);
                EXPECT_NEAR(hfunc_inv(c.family, eta, CondOn::First, h1, w), x, 1e-9) << c.family.name();
            }
        }
    }
}

TEST(Sampling, DeterministicAndIndependent) {
    const auto a = copula_sample(CopulaFamily::independence(), 0.0, 4, 11);
    const auto b = copula_sample(CopulaFamily::independence(), 0.0, 4, 11);
    ASSERT_EQ(a.size(), 4u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i], b[i]);
        EXPECT_GT(a[i][0], 0.0);
        EXPECT_LT(a[i][1], 1.0);
    }
}

TEST(Sampling, KendallTauConsistency) {
    const std::vector<Case> cases{{CopulaFamily::gaussian(), 0.5},
                                  {CopulaFamily::gumbel(Rotation::R90), -0.4},
                                  {CopulaFamily::gumbel(), 0.4},
                                  {CopulaFamily::clayton(Rotation::R270), -0.3},
                                  {CopulaFamily::frank(), 0.35},
                                  {CopulaFamily::student_t(5), -0.25}};
    for (const auto& c : cases) {
        const auto s = copula_sample(c.family, tau_to_param(c.family, c.tau), 2000, 42);
        std::vector<double> u, v;
        for (const auto& p : s) {
            u.push_back(p[0]);
            v.push_back(p[1]);
        }
        const double tau_hat = oracle::kendall_tau_pairs(u, v);
        EXPECT_NEAR(tau_hat, c.tau, 0.03) << c.family.name();
        EXPECT_NEAR(kendall_tau(u, v), tau_hat, 1e-12);
    }
}

TEST(Families, NameRoundTrip) {
    for (const auto& c : family_cases()) EXPECT_EQ(parse_family(c.family.name()), c.family);
    EXPECT_THROW(parse_family("Joe"), DomainError);
    EXPECT_THROW(CopulaFamily::student_t(1.0).validate(), DomainError);
}

TEST(BivariateNormal, OrthantAndSymmetry) {
    for (double r : {-0.9, -0.3, 0.0, 0.4, 0.95}) {
        EXPECT_NEAR(bivariate_normal_cdf(0.0, 0.0, r), oracle::normal_orthant(r), 1e-12);
    }
    EXPECT_NEAR(bivariate_normal_cdf(0.3, -1.1, 0.6), bivariate_normal_cdf(-1.1, 0.3, 0.6), 1e-14);
    // Integral of the density over (-inf, 1] x (-inf, 0.5].
    const double ref = oracle::simpson(
        [](double x) {
            return oracle::simpson([x](double y) { return oracle::bvn_density(x, y, 0.7); }, -9.0, 0.5, 400);
        },
        -9.0, 1.0, 400);
    EXPECT_NEAR(bivariate_normal_cdf(1.0, 0.5, 0.7), ref, 1e-8);
}
