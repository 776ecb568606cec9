#pragma once
// Forecast verification: proper scores, point scores, calibration
// diagnostics and significance testing.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "gamdvqr/pair_fit.hpp"

namespace gamdvqr {

// CRPS of N(mu, sigma^2) at y: sigma [z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi)].
double crps_normal(double mu, double sigma, double y);
// Negative log density of N(mu, sigma^2) at y.
double logs_normal(double mu, double sigma, double y);

// CRPS from K quantiles z_k = F^-1(k / (K + 1)):
//   (1/K) sum |z_k - y| - 1/(2 K^2) sum_k sum_k' |z_k - z_k'|.
double crps_from_quantiles(std::span<const double> quantiles, double y);
double crps_quantile_approx(const std::function<double(double)>& quantile_fn, double y, std::size_t K);
// Levels k / (K + 1), k = 1..K.
std::vector<double> crps_levels(std::size_t K);
// Same approximation on the empirical (type 7) quantile function of the members.
double crps_ensemble(std::span<const double> members, double y, std::size_t K = 100);

double mae(std::span<const double> medians, std::span<const double> obs);
double rmse(std::span<const double> means, std::span<const double> obs);
double crpss(double mean_crps, double mean_crps_ref);

// Rank of y among the members, in 1..m+1; ties are broken uniformly at random.
std::size_t ensemble_rank(double y, std::span<const double> members, std::mt19937_64& rng);
// Counts per rank 1..m+1 (index 0 holds rank 1).
std::vector<std::size_t> rank_histogram(std::span<const std::size_t> ranks, std::size_t m);
// Counts of PIT values in `bins` equal-width bins.
std::vector<std::size_t> pit_histogram(std::span<const double> pit, std::size_t bins);

struct ChiSquareResult {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};
ChiSquareResult chi2_uniformity(std::span<const std::size_t> counts);

// Kolmogorov distance between the empirical CDF of x and U(0, 1).
double ks_uniform(std::span<const double> x);

struct CoverageWidth {
    double coverage = 0.0;  // percent
    double width = 0.0;
};
CoverageWidth coverage_width(std::span<const double> lower, std::span<const double> upper,
                             std::span<const double> obs);
// Nominal coverage of the central interval spanned by an m-member ensemble, (m - 1)/(m + 1).
double nominal_coverage(std::size_t m);
// Central-interval quantile levels matching an m-member ensemble: 1/(m+1), m/(m+1).
std::pair<double, double> central_interval_levels(std::size_t m);

enum class Alternative : std::uint8_t { TwoSided, Less, Greater };

struct DmResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool degenerate = false;  // zero variance of the loss differential
};
// Diebold-Mariano test of equal mean score. d_t = a_t - b_t; statistic
// sqrt(n) mean(d) / sd(d) with a Bartlett HAC variance when hac_lag > 0.
// Less: A has the lower expected score. Requires n >= 30.
DmResult dm_test(std::span<const double> a, std::span<const double> b, Alternative alt = Alternative::TwoSided,
                 std::size_t hac_lag = 0);

// Benjamini-Hochberg step-up procedure; returns rejection flags in input order.
std::vector<bool> bh_adjust(std::span<const double> p_values, double alpha);

// Normalized contour density d(zy, zx) = c(Phi(zy), Phi(zx)) phi(zy) phi(zx)
// on a grid_n x grid_n grid over [zmin, zmax]^2. Row i varies zy, column j varies zx.
struct ContourGrid {
    std::vector<double> z;
    std::vector<std::vector<double>> d;
};
ContourGrid contour_grid(const CopulaSpec& spec, const CovariateRow& row, std::size_t grid_n, double zmin = -3.0,
                         double zmax = 3.0);

}  // namespace gamdvqr
