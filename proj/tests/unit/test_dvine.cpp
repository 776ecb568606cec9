#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gamdvqr/dvine.hpp"
#include "gamdvqr/simulate.hpp"
#include "gamdvqr/stats.hpp"
#include "oracles.hpp"

using namespace gamdvqr;

namespace {

std::vector<CovariateRow> rows_for(std::size_t n) {
    return covariate_rows(daily_dates(parse_date("2015-01-01"), n));
}

// Zero-mean unit-variance trivariate normal draws with correlation R.
std::vector<std::array<double, 3>> mvn3(const std::vector<std::vector<double>>& R, std::size_t n, std::uint64_t seed) {
    const double l11 = std::sqrt(1.0 - R[0][1] * R[0][1]);
    const double l21 = (R[1][2] - R[0][1] * R[0][2]) / l11;
    const double l22 = std::sqrt(1.0 - R[0][2] * R[0][2] - l21 * l21);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<std::array<double, 3>> out(n);
    for (auto& o : out) {
        const double z0 = g(rng), z1 = g(rng), z2 = g(rng);
        o = {z0, R[0][1] * z0 + l11 * z1, R[0][2] * z0 + l21 * z1 + l22 * z2};
    }
    return out;
}

DVineOptions gaussian_only() {
    DVineOptions o;
    o.pair.families = {CopulaKind::Gaussian};
    return o;
}

// Two-predictor all-Gaussian model with standard normal margins and given
// tree-1 and tree-2 correlations, response position 0 then X1, X2.
DVineModel gaussian_model(double r01, double r12, double r02_1) {
    DVineModel m;
    m.response_margin = MarginModel::normal(0.0, 1.0);
    m.predictor_names = {"x1", "x2"};
    m.order = {0, 1};
    m.predictor_margins = {MarginModel::normal(0.0, 1.0), MarginModel::normal(0.0, 1.0)};
    auto spec = [](double rho) {
        CopulaSpec s;
        s.family = CopulaFamily::gaussian();
        s.tau_model = TauModel::constant(inverse_link_tau(param_to_tau(CopulaFamily::gaussian(), rho)));
        s.n_params = 1;
        return s;
    };
    m.trees = {{spec(r01), spec(r12)}, {spec(r02_1)}};
    return m;
}

}  // namespace

TEST(DVine, EmptyOrderIsMargin) {
    DVineModel m;
    m.response_margin = MarginModel::normal(3.0, 2.0);
    m.predictor_names = {"x"};
    const std::vector<double> x{0.4};
    const CovariateRow r{};
    EXPECT_NEAR(m.conditional_cdf(x, r, 3.0), 0.5, 1e-14);
    EXPECT_NEAR(m.predict_quantile(x, r, 0.5), 3.0, 1e-9);
}

TEST(DVine, IndependenceEdgesIgnorePredictors) {
    DVineModel m = gaussian_model(0.5, 0.3, 0.2);
    m.trees = {{CopulaSpec::independence(), CopulaSpec::independence()}, {CopulaSpec::independence()}};
    const CovariateRow r{};
    for (double x1 : {-1.0, 2.0}) {
        const std::vector<double> x{x1, 0.3};
        EXPECT_NEAR(m.conditional_cdf(x, r, 0.7), oracle::Phi(0.7), 1e-12);
    }
}

TEST(DVine, GaussianConditionalOracle) {
    // Correlation matrix of (Y, X1, X2) and its D-vine parametrization.
    const std::vector<std::vector<double>> R{{1.0, 0.7, 0.5}, {0.7, 1.0, 0.3}, {0.5, 0.3, 1.0}};
    const double r02_1 = oracle::partial_corr_02_1(R);
    const DVineModel m = gaussian_model(R[0][1], R[1][2], r02_1);
    const CovariateRow r{};
    for (double x1 : {-1.5, 0.0, 0.8}) {
        for (double x2 : {-0.7, 1.9}) {
            const std::vector<double> x{x1, x2};
            const auto [mu, sd] = oracle::conditional_normal(R, x);
            for (double a : {0.05, 0.25, 0.5, 0.75, 0.95}) {
                const double q = m.predict_quantile(x, r, a);
                EXPECT_NEAR(q, mu + sd * oracle::Phi_inv(a), 1e-6);
                EXPECT_NEAR(m.conditional_cdf(x, r, q), a, 1e-9);
            }
            for (double y : {-1.0, 0.0, 1.2}) EXPECT_NEAR(m.conditional_cdf(x, r, y), oracle::Phi((y - mu) / sd), 1e-9);
        }
    }
}

TEST(DVine, CllMatchesDirectProduct) {
    const DVineModel m = gaussian_model(0.6, -0.2, 0.35);
    const CovariateRow r{};
    const std::vector<double> u{0.3, 0.8};
    const double v = 0.45;
    // Direct: c01(v,u1) * c02|1(h(v|u1), h(u2|u1)).
    const double e01 = m.trees[0][0].param_at(r), e12 = m.trees[0][1].param_at(r), e02 = m.trees[1][0].param_at(r);
    const auto G = CopulaFamily::gaussian();
    const double a = hfunc(G, e01, CondOn::Second, v, u[0]);
    const double b = hfunc(G, e12, CondOn::First, u[0], u[1]);
    const double direct = copula_log_pdf(G, e01, v, u[0]) + copula_log_pdf(G, e02, a, b);
    EXPECT_NEAR(m.cll_unit(u, r, v), direct, 1e-12);
    EXPECT_DOUBLE_EQ(m.response_edge_params(), 2.0);
}

TEST(DVine, SelectsInformativePredictorAndStops) {
    const std::size_t n = 2000;
    const auto rows = rows_for(n);
    const auto pairs = copula_sample(CopulaFamily::gaussian(), tau_to_param(CopulaFamily::gaussian(), 0.6), n, 21);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> v(n);
    std::vector<std::vector<double>> u(3, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = pairs[i][0];
        u[0][i] = unif(rng);
        u[1][i] = pairs[i][1];
        u[2][i] = unif(rng);
    }
    const auto fit = select_dvine(v, u, rows, gaussian_only());
    ASSERT_FALSE(fit.order.empty());
    EXPECT_EQ(fit.order[0], 1u);
    for (std::size_t i = 1; i < fit.bic_path.size(); ++i) EXPECT_LT(fit.bic_path[i], fit.bic_path[i - 1]);
    EXPECT_NEAR(fit.bic, fit.bic_path.back(), 1e-9);

    // Nesting: adding predictor 0 after 1 cannot lower the fitted cll.
    const std::vector<std::size_t> one{1}, two{1, 0};
    const auto f1 = fit_dvine_order(v, u, one, rows, gaussian_only());
    const auto f2 = fit_dvine_order(v, u, two, rows, gaussian_only());
    EXPECT_GE(f2.cll, f1.cll - 1e-9);
    // Additivity of cll over the index-0 edges.
    EXPECT_NEAR(f2.cll - f1.cll, f2.trees[1][0].loglik, 1e-6);
}

TEST(DVine, NoInformativePredictorsGivesEmptyModel) {
    const std::size_t n = 1000;
    const auto rows = rows_for(n);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> v(n);
    std::vector<std::vector<double>> u(2, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = unif(rng);
        u[0][i] = unif(rng);
        u[1][i] = unif(rng);
    }
    const auto fit = select_dvine(v, u, rows, gaussian_only());
    EXPECT_TRUE(fit.order.empty());
    EXPECT_EQ(fit.cll, 0.0);
}

TEST(DVine, FitDvqrGaussianPartialCorrelations) {
    const std::vector<std::vector<double>> R{{1.0, 0.7, 0.5}, {0.7, 1.0, 0.3}, {0.5, 0.3, 1.0}};
    const auto data = mvn3(R, 2000, 31);
    const auto rows = rows_for(2000);
    std::vector<double> y;
    std::vector<std::vector<double>> x(2);
    for (const auto& d : data) {
        y.push_back(d[0]);
        x[0].push_back(d[1]);
        x[1].push_back(d[2]);
    }
    DVqrConfig cfg;
    cfg.vine = gaussian_only();
    cfg.response_margin.candidates = {{MarginFamily::Normal, Transform::None}};
    cfg.predictor_margins.assign(2, cfg.response_margin);
    const DVineModel m = fit_dvqr(y, x, {"x1", "x2"}, rows, cfg);
    ASSERT_EQ(m.order.size(), 2u);
    EXPECT_EQ(m.order[0], 0u);
    const CovariateRow r{};
    EXPECT_NEAR(m.trees[0][0].param_at(r), R[0][1], 0.05);
    EXPECT_NEAR(m.trees[0][1].param_at(r), R[1][2], 0.05);
    EXPECT_NEAR(m.trees[1][0].param_at(r), oracle::partial_corr_02_1(R), 0.05);
    EXPECT_NEAR(model_cll(m, y, x, rows), m.cll, 1e-6 * std::abs(m.cll));

    // Quantile monotonicity and inversion consistency on the fitted model.
    const std::vector<double> xv{0.4, -1.0};
    double prev = -1e300;
    for (double a = 0.02; a < 1.0; a += 0.04) {
        const double q = m.predict_quantile(xv, r, a);
        EXPECT_GE(q, prev);
        EXPECT_NEAR(m.conditional_cdf(xv, r, q), a, 1e-5);
        prev = q;
    }
}

TEST(DVine, ConstantDesignMatchesDvqrOptions) {
    // With identical margins and family sets, the GAM-DVQR constant model and
    // the DVQR options select the same order.
    const std::vector<std::vector<double>> R{{1.0, 0.6, 0.2}, {0.6, 1.0, 0.1}, {0.2, 0.1, 1.0}};
    const auto data = mvn3(R, 800, 41);
    const auto rows = rows_for(800);
    std::vector<double> v;
    std::vector<std::vector<double>> u(2);
    for (const auto& d : data) {
        v.push_back(oracle::Phi(d[0]));
        u[0].push_back(oracle::Phi(d[1]));
        u[1].push_back(oracle::Phi(d[2]));
    }
    DVineOptions a = dvqr_options();
    DVineOptions b;
    b.pair.families = a.pair.families;
    const auto fa = select_dvine(v, u, rows, a);
    const auto fb = select_dvine(v, u, rows, b);
    EXPECT_EQ(fa.order, fb.order);
    EXPECT_NEAR(fa.cll, fb.cll, 1e-9);
}
