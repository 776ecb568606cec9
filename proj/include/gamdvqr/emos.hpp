#pragma once
// Gaussian EMOS (nonhomogeneous regression) and its gradient-boosted variant.
//
//   Y ~ N(mu, sigma^2),  mu = a0 + sum_j a_j z_j,  log sigma = b0 + sum_j b_j z_j
//
// with z_j = (x_j - center_j) / scale_j. Plain EMOS uses center 0, scale 1
// and masks restricting which predictors enter each parameter; EMOS-GB
// standardizes every predictor.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gamdvqr {

enum class EmosLoss : std::uint8_t { CRPS, LogS };
enum class InfoCriterion : std::uint8_t { AIC, BIC };

std::string loss_name(EmosLoss loss);
EmosLoss parse_loss(const std::string& s);

struct EmosModel {
    std::vector<std::string> names;  // predictor names, defines the x layout
    std::vector<double> mu_coef;     // intercept first, then one per predictor
    std::vector<double> sigma_coef;
    std::vector<double> center, scale;
    EmosLoss loss = EmosLoss::CRPS;
    bool boosted = false;

    // Fit metadata.
    double train_loss = 0.0;  // mean loss on the training data
    int iterations = 0;
    bool converged = true;
    std::string message;

    double mu(std::span<const double> x) const;
    double sigma(std::span<const double> x) const;
    double quantile(std::span<const double> x, double alpha) const;
};

// Training data: y and a raw predictor matrix (n x p) with column names.
struct EmosData {
    std::vector<double> y;
    Eigen::MatrixXd x;
    std::vector<std::string> names;
};

// Mean loss of a model on data.
double emos_mean_loss(const EmosModel& m, const EmosData& data, EmosLoss loss);

struct EmosOptions {
    EmosLoss loss = EmosLoss::CRPS;
    int max_iter = 5000;
    double rel_tol = 1e-8;
    // Predictors entering mu / log sigma; empty means all.
    std::vector<std::string> mu_predictors;
    std::vector<std::string> sigma_predictors;
};

// Full BFGS fit with analytic gradients. Requires n >= 100.
EmosModel fit_emos(const EmosData& data, const EmosOptions& opts);

// Standard seasonal EMOS: mu on (sin, cos, mean), log sigma on (sin, cos, sd).
EmosOptions seasonal_emos_options(const std::string& mean_name, const std::string& sd_name,
                                  EmosLoss loss = EmosLoss::CRPS);

struct EmosGbOptions {
    EmosLoss loss = EmosLoss::LogS;
    int max_iter = 500;
    double step = 0.05;
    InfoCriterion stop = InfoCriterion::AIC;
};

struct BoostUpdate {
    bool sigma_block = false;
    std::size_t index = 0;  // 0 = intercept, j + 1 = predictor j
};

struct EmosGbResult {
    EmosModel model;               // coefficients at the information-criterion minimum
    std::vector<BoostUpdate> path;  // every update performed, in order
    std::vector<double> loss_path;  // mean training loss after each iteration (index 0: start)
    std::vector<double> ic_path;
    int best_iteration = 0;
    std::vector<std::string> skipped;  // zero-variance predictors
};

EmosGbResult fit_emos_gb(const EmosData& data, const EmosGbOptions& opts);

}  // namespace gamdvqr
