#pragma once
// Univariate marginal models: seasonal GAMLSS-type parametric distributions
// and Gaussian-kernel density estimates. Both expose the probability
// integral transform (cdf) and its inverse (quantile).
//
// Parametric margins:  location  mu    = h_mu(a0 + a1 x_sin + a2 x_cos)
//                      scale     sigma = exp(b0 + b1 x_sin + b2 x_cos)
// with constant shape parameters. h_mu is the identity except for Beta,
// where it is the logistic function. The family is fitted on the
// transformed scale z = T(y) (T = id, log or logit); densities include the
// Jacobian so likelihoods are comparable across transforms.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gamdvqr/tau_model.hpp"

namespace gamdvqr {

enum class MarginKind : std::uint8_t { Parametric, KDE };
// SkewT is the Fernandez-Steel two-piece Student-t (skewness nu, df phi).
// SkewNormal is Azzalini's skew normal with shape nu.
// Beta uses mean mu in (0,1) and dispersion sigma: a = mu/sigma, b = (1-mu)/sigma.
enum class MarginFamily : std::uint8_t { Normal, SkewNormal, SkewT, Beta };
enum class Transform : std::uint8_t { None, Log, Logit };

std::string family_name(MarginFamily f);
std::string transform_name(Transform t);
MarginFamily parse_margin_family(const std::string& s);
Transform parse_transform(const std::string& s);

struct MarginCandidate {
    MarginFamily family = MarginFamily::Normal;
    Transform transform = Transform::None;
    std::string name() const;
};

// Candidate sets: A = {N, SN, ST}, B = logit{N, SN, ST} + Beta, C = log{N, SN, ST}.
std::vector<MarginCandidate> candidate_set(char set_name);

class MarginModel {
public:
    MarginKind kind = MarginKind::Parametric;
    MarginFamily family = MarginFamily::Normal;
    Transform transform = Transform::None;
    std::array<double, 3> mu_coef{0.0, 0.0, 0.0};
    std::array<double, 3> sigma_coef{0.0, 0.0, 0.0};
    double nu = 0.0;   // skewness (SkewNormal shape, SkewT gamma)
    double phi = 0.0;  // SkewT degrees of freedom
    // When > 0 the data were compressed into (0,1) by y' = (y (n-1) + 0.5) / n.
    std::size_t boundary_n = 0;

    // KDE only.
    std::vector<double> kde_samples;
    double bandwidth = 0.0;

    // Fit metadata.
    double loglik = 0.0;
    double bic = 0.0;
    std::size_t n_obs = 0;

    static MarginModel normal(double mu, double sigma);

    double mu(const CovariateRow& row) const;
    double sigma(const CovariateRow& row) const;

    double cdf(double y, const CovariateRow& row) const;
    double quantile(double p, const CovariateRow& row) const;
    double log_pdf(double y, const CovariateRow& row) const;
    double pdf(double y, const CovariateRow& row) const;

    // Rebuilds the cached KDE evaluation grid (called after fitting/loading).
    void build_kde_cache();
    std::string describe() const;

private:
    double kde_cdf(double y) const;
    double kde_quantile(double p) const;
    std::vector<double> grid_x_, grid_cdf_;
};

double margin_cdf(const MarginModel& m, double y, const CovariateRow& row);
double margin_quantile(const MarginModel& m, double p, const CovariateRow& row);

// Maximum-likelihood fit of every candidate; returns the minimum-BIC model.
// Throws DomainError naming the candidates if all of them fail.
MarginModel fit_margin(std::span<const double> samples, std::span<const CovariateRow> rows,
                       std::span<const MarginCandidate> candidates);
MarginModel fit_margin_family(std::span<const double> samples, std::span<const CovariateRow> rows,
                              const MarginCandidate& candidate);

// Gaussian-kernel density with Silverman's bandwidth 0.9 min(sd, IQR/1.34) n^-1/5.
MarginModel kde_fit(std::span<const double> samples);

}  // namespace gamdvqr
