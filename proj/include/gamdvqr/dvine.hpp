#pragma once
// D-vine copula quantile regression with covariate-dependent pair-copulas.
//
// Vine positions: 0 is the response, position i >= 1 holds predictor
// order[i-1]. Tree t (1-based) has edges e = 0..k-t joining positions e and
// e+t given the positions strictly between them. trees[t-1][e] stores that
// edge's copula with the lower position as its first argument.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gamdvqr/margins.hpp"
#include "gamdvqr/pair_fit.hpp"

namespace gamdvqr {

struct DVineOptions {
    PairFitOptions pair{};
    std::size_t max_predictors = 8;
};

// Options of the DVQR baseline: constant tau and Frank added to the family set.
DVineOptions dvqr_options();

// Margin specification for one variable.
struct MarginSpec {
    bool kde = false;
    std::vector<MarginCandidate> candidates = candidate_set('A');
    // Used when every candidate fails on this variable.
    std::vector<MarginCandidate> fallback = candidate_set('A');
};

MarginModel fit_margin_spec(std::span<const double> samples, std::span<const CovariateRow> rows,
                            const MarginSpec& spec);

struct DVineModel {
    MarginModel response_margin;
    std::vector<std::string> predictor_names;  // all candidate predictors, defines the x layout
    std::vector<std::size_t> order;            // selected predictors (indices into predictor_names)
    std::vector<MarginModel> predictor_margins;  // aligned with order
    std::vector<std::vector<CopulaSpec>> trees;
    DesignKind design = DesignKind::Constant;
    // Copula-scale conditional log-likelihood (response density excluded).
    double cll = 0.0;
    double bic = 0.0;
    std::size_t n_obs = 0;
    std::string config_hash;
    std::vector<std::string> diagnostics;

    std::size_t depth() const { return order.size(); }

    // x holds one value per entry of predictor_names.
    double conditional_cdf(std::span<const double> x, const CovariateRow& row, double y) const;
    double predict_quantile(std::span<const double> x, const CovariateRow& row, double alpha) const;
    std::vector<double> predict_quantiles(std::span<const double> x, const CovariateRow& row,
                                          std::span<const double> alphas) const;

    // Copula-scale counterparts taking the PIT values of the selected
    // predictors (aligned with order) and of the response.
    double conditional_cdf_unit(std::span<const double> u_pred, const CovariateRow& row, double v) const;
    double quantile_unit(std::span<const double> u_pred, const CovariateRow& row, double alpha) const;
    // Sum of log densities of the edges containing the response.
    double cll_unit(std::span<const double> u_pred, const CovariateRow& row, double v) const;

    // Number of parameters of the edges containing the response.
    double response_edge_params() const;
};

// Result of the copula-scale forward selection.
struct DVineFit {
    std::vector<std::size_t> order;
    std::vector<std::vector<CopulaSpec>> trees;
    double cll = 0.0;
    double bic = 0.0;
    // BIC after each accepted step; the first entry is the empty model (0).
    std::vector<double> bic_path;
    std::vector<std::string> diagnostics;
};

// Greedy forward selection on PIT data. u_cols[j][i] is the PIT value of
// candidate predictor j in case i; v holds the response PIT values.
DVineFit select_dvine(std::span<const double> v, const std::vector<std::vector<double>>& u_cols,
                      std::span<const CovariateRow> rows, const DVineOptions& opts);

// Fits a vine with a fixed predictor order (no selection).
DVineFit fit_dvine_order(std::span<const double> v, const std::vector<std::vector<double>>& u_cols,
                         std::span<const std::size_t> order, std::span<const CovariateRow> rows,
                         const DVineOptions& opts);

struct DVqrConfig {
    DVineOptions vine{};
    MarginSpec response_margin{};
    // One spec per predictor; when empty every predictor uses the default spec.
    std::vector<MarginSpec> predictor_margins;
};

// Inference for margins: fits all margins, PIT-transforms the data and runs
// the forward selection. x_cols[j][i] is predictor j in case i.
DVineModel fit_dvqr(std::span<const double> y, const std::vector<std::vector<double>>& x_cols,
                    const std::vector<std::string>& names, std::span<const CovariateRow> rows,
                    const DVqrConfig& cfg);

// Copula-scale conditional log-likelihood of a model on data.
double model_cll(const DVineModel& model, std::span<const double> y, const std::vector<std::vector<double>>& x_cols,
                 std::span<const CovariateRow> rows);

}  // namespace gamdvqr
