#pragma once
// Maximum-likelihood fitting of one (conditional) pair-copula whose Kendall's
// tau follows a TauModel, with BIC-based family selection.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "gamdvqr/copula.hpp"
#include "gamdvqr/optimize.hpp"
#include "gamdvqr/tau_model.hpp"

namespace gamdvqr {

using UnitPair = std::array<double, 2>;

// A fitted pair-copula.
struct CopulaSpec {
    CopulaFamily family{};
    TauModel tau_model{};
    double loglik = 0.0;
    // Coefficient count (effective degrees of freedom for penalized splines),
    // plus one when the StudentT df was profiled.
    double n_params = 0.0;
    double bic = 0.0;
    std::size_t n_obs = 0;
    bool fit_failed = false;  // every parametric candidate failed numerically

    static CopulaSpec independence(std::size_t n = 0);

    // Kendall's tau at the covariates, clamped into the family's range.
    double tau_at(const CovariateRow& row) const;
    double param_at(const CovariateRow& row) const;
};

// Clamps tau into the open tau range of the family, 1e-4 away from its ends.
double clamp_tau(const CopulaFamily& family, double tau);

double pair_loglik(const CopulaFamily& family, const TauModel& tau_model, std::span<const UnitPair> pairs,
                   std::span<const CovariateRow> rows);

struct PairFitOptions {
    std::vector<CopulaKind> families{CopulaKind::Gaussian, CopulaKind::StudentT, CopulaKind::Clayton,
                                     CopulaKind::Gumbel};
    DesignKind design = DesignKind::Constant;
    SplineConfig spline{};
    std::vector<double> lambda_grid{0.0, 0.1, 1.0, 10.0, 100.0};
    std::vector<double> df_grid{3.0, 5.0, 10.0, 20.0};
    std::size_t min_obs = 30;
    BfgsOptions bfgs{500, 1e-6, 1e-12, 1e-6};  // the relative stop catches round-off stalls on large samples
};

// One evaluated candidate, kept for diagnostics.
struct CandidateFit {
    CopulaSpec spec;
    bool ok = false;
    std::string error;
};

struct PairFitResult {
    CopulaSpec best;
    std::vector<CandidateFit> candidates;
};

PairFitResult fit_pair_detailed(std::span<const UnitPair> pairs, std::span<const CovariateRow> rows,
                                const PairFitOptions& opts);
CopulaSpec fit_pair(std::span<const UnitPair> pairs, std::span<const CovariateRow> rows,
                    const PairFitOptions& opts);

// Fits the tau-model coefficients of a fixed family. `fixed_zero` lists
// coefficient indices held at zero. Returns the spec with loglik and BIC.
CopulaSpec fit_tau_model(const CopulaFamily& family, std::span<const UnitPair> pairs,
                         std::span<const CovariateRow> rows, const PairFitOptions& opts, double lambda,
                         std::span<const std::size_t> fixed_zero = {});

// Likelihood-ratio p-value per coefficient of a fitted spec (refit with that
// coefficient fixed at zero, chi-square with one degree of freedom).
std::vector<double> coefficient_lr_pvalues(const CopulaSpec& spec, std::span<const UnitPair> pairs,
                                           std::span<const CovariateRow> rows, const PairFitOptions& opts);

}  // namespace gamdvqr
