#pragma once
// Covariate-dependent Kendall's tau: tau(z) = tanh(x(z)' beta / 2), i.e. the
// linear predictor lives on the 2*artanh(tau) scale.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gamdvqr {

enum class DesignKind : std::uint8_t { Constant, LinearSinCos, CyclicSpline };

std::string design_name(DesignKind kind);
DesignKind parse_design(const std::string& name);

// Day-of-year covariates of one forecast case.
struct CovariateRow {
    int doy = 1;
    double u_sin = 0.0;
    double u_cos = 1.0;

    // u_sin = sin(2 pi doy / 365.25), u_cos = cos(2 pi doy / 365.25).
    static CovariateRow from_doy(int doy);
};

// Cyclic cubic B-spline over one year. The period [start, start + period)
// is split into n_basis equal segments; basis j is the cardinal cubic
// B-spline starting at knot j, wrapped around the period.
struct SplineConfig {
    int n_basis = 8;
    double start = 1.0;
    double period = 365.25;

    friend bool operator==(const SplineConfig&, const SplineConfig&) = default;
};

// Evaluates the cyclic basis at a real-valued day of year.
std::vector<double> cyclic_spline_basis(double doy, const SplineConfig& cfg);

// Cyclic second-difference penalty D'D (n_basis x n_basis).
Eigen::MatrixXd cyclic_difference_penalty(int n_basis);

double link_tau(double eta_lin);
double inverse_link_tau(double tau);

std::size_t design_width(DesignKind kind, const SplineConfig& cfg);
void design_row(const CovariateRow& row, DesignKind kind, const SplineConfig& cfg, std::span<double> out);
Eigen::MatrixXd build_design(std::span<const CovariateRow> rows, DesignKind kind,
                             const SplineConfig& cfg = {});

struct TauModel {
    DesignKind kind = DesignKind::Constant;
    std::vector<double> coefficients{0.0};
    SplineConfig spline{};
    double penalty = 0.0;  // lambda of the CyclicSpline fit

    static TauModel constant(double alpha0) { return {DesignKind::Constant, {alpha0}, {}, 0.0}; }

    std::size_t width() const { return design_width(kind, spline); }
    // Throws DomainError on a coefficient count mismatch.
    void validate() const;
    double linear_predictor(const CovariateRow& row) const;
    double tau(const CovariateRow& row) const { return link_tau(linear_predictor(row)); }
};

std::vector<double> predict_tau(const TauModel& model, std::span<const CovariateRow> rows);

}  // namespace gamdvqr
