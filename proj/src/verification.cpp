#include "gamdvqr/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gamdvqr/stats.hpp"

namespace gamdvqr {

double crps_normal(double mu, double sigma, double y) {
    if (!(sigma > 0.0)) {
        if (sigma == 0.0) return std::abs(y - mu);
        throw DomainError("crps_normal: negative sigma");
    }
    const double z = (y - mu) / sigma;
    return sigma * (z * (2.0 * norm_cdf(z) - 1.0) + 2.0 * norm_pdf(z) - 1.0 / std::sqrt(kPi));
}

double logs_normal(double mu, double sigma, double y) {
    if (!(sigma > 0.0)) throw DomainError("logs_normal: sigma must be positive");
    const double z = (y - mu) / sigma;
    return 0.5 * z * z + std::log(sigma) + 0.5 * std::log(2.0 * kPi);
}

double crps_from_quantiles(std::span<const double> quantiles, double y) {
    const std::size_t K = quantiles.size();
    if (K == 0) throw DomainError("crps_from_quantiles: no quantiles");
    std::vector<double> z(quantiles.begin(), quantiles.end());
    std::sort(z.begin(), z.end());
    const double k = static_cast<double>(K);
    double abs_sum = 0.0, pair_sum = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        abs_sum += std::abs(z[i] - y);
        // sum_{k,k'} |z_k - z_k'| = 2 sum_i (2i - K - 1) z_(i) with 1-based i.
        pair_sum += (2.0 * static_cast<double>(i + 1) - k - 1.0) * z[i];
    }
    return abs_sum / k - pair_sum / (k * k);
}

std::vector<double> crps_levels(std::size_t K) {
    std::vector<double> lv(K);
    for (std::size_t k = 0; k < K; ++k) lv[k] = static_cast<double>(k + 1) / static_cast<double>(K + 1);
    return lv;
}

double crps_quantile_approx(const std::function<double(double)>& quantile_fn, double y, std::size_t K) {
    if (K < 2) throw DomainError("crps_quantile_approx: K must be at least 2");
    std::vector<double> z;
    z.reserve(K);
    for (double p : crps_levels(K)) z.push_back(quantile_fn(p));
    return crps_from_quantiles(z, y);
}

double crps_ensemble(std::span<const double> members, double y, std::size_t K) {
    if (members.empty()) throw DomainError("crps_ensemble: no members");
    std::vector<double> sorted(members.begin(), members.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> z;
    z.reserve(K);
    for (double p : crps_levels(K)) z.push_back(empirical_quantile(sorted, p));
    return crps_from_quantiles(z, y);
}

namespace {
void check_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw DomainError(std::string(what) + ": length mismatch");
    if (a == 0) throw DomainError(std::string(what) + ": empty input");
}
}  // namespace

double mae(std::span<const double> medians, std::span<const double> obs) {
    check_same_length(medians.size(), obs.size(), "mae");
    double s = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) s += std::abs(medians[i] - obs[i]);
    return s / static_cast<double>(obs.size());
}

double rmse(std::span<const double> means, std::span<const double> obs) {
    check_same_length(means.size(), obs.size(), "rmse");
    double s = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) s += (means[i] - obs[i]) * (means[i] - obs[i]);
    return std::sqrt(s / static_cast<double>(obs.size()));
}

double crpss(double mean_crps, double mean_crps_ref) {
    if (!(mean_crps_ref > 0.0)) throw DomainError("crpss: reference CRPS must be positive");
    return 1.0 - mean_crps / mean_crps_ref;
}

std::size_t ensemble_rank(double y, std::span<const double> members, std::mt19937_64& rng) {
    std::size_t below = 0, ties = 0;
    for (double x : members) {
        if (!std::isfinite(x)) throw DomainError("ensemble_rank: non-finite member");
        if (x < y) ++below;
        else if (x == y) ++ties;
    }
    if (ties > 0) below += std::uniform_int_distribution<std::size_t>(0, ties)(rng);
    return below + 1;
}

std::vector<std::size_t> rank_histogram(std::span<const std::size_t> ranks, std::size_t m) {
    std::vector<std::size_t> counts(m + 1, 0);
    for (std::size_t r : ranks) {
        if (r < 1 || r > m + 1) throw DomainError("rank_histogram: rank out of range");
        ++counts[r - 1];
    }
    return counts;
}

std::vector<std::size_t> pit_histogram(std::span<const double> pit, std::size_t bins) {
    if (bins == 0) throw DomainError("pit_histogram: need at least one bin");
    std::vector<std::size_t> counts(bins, 0);
    for (double p : pit) {
        const auto b = static_cast<std::size_t>(std::clamp(p, 0.0, 1.0) * static_cast<double>(bins));
        ++counts[std::min(b, bins - 1)];
    }
    return counts;
}

ChiSquareResult chi2_uniformity(std::span<const std::size_t> counts) {
    if (counts.size() < 2) throw DomainError("chi2_uniformity: need at least two cells");
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
    if (total == 0.0) throw DomainError("chi2_uniformity: no observations");
    const double expected = total / static_cast<double>(counts.size());
    ChiSquareResult r;
    for (std::size_t c : counts) {
        const double d = static_cast<double>(c) - expected;
        r.statistic += d * d / expected;
    }
    r.df = static_cast<double>(counts.size() - 1);
    r.p_value = chi2_sf(r.statistic, r.df);
    return r;
}

double ks_uniform(std::span<const double> x) {
    if (x.empty()) throw DomainError("ks_uniform: empty input");
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double u = std::clamp(s[i], 0.0, 1.0);
        d = std::max({d, static_cast<double>(i + 1) / n - u, u - static_cast<double>(i) / n});
    }
    return d;
}

CoverageWidth coverage_width(std::span<const double> lower, std::span<const double> upper,
                             std::span<const double> obs) {
    check_same_length(lower.size(), obs.size(), "coverage_width");
    check_same_length(upper.size(), obs.size(), "coverage_width");
    std::size_t inside = 0;
    double width = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (obs[i] >= lower[i] && obs[i] <= upper[i]) ++inside;
        width += upper[i] - lower[i];
    }
    const double n = static_cast<double>(obs.size());
    return {100.0 * static_cast<double>(inside) / n, width / n};
}

double nominal_coverage(std::size_t m) {
    if (m < 2) throw DomainError("nominal_coverage: need m >= 2");
    return static_cast<double>(m - 1) / static_cast<double>(m + 1);
}

std::pair<double, double> central_interval_levels(std::size_t m) {
    if (m < 2) throw DomainError("central_interval_levels: need m >= 2");
    const double d = static_cast<double>(m + 1);
    return {1.0 / d, static_cast<double>(m) / d};
}

DmResult dm_test(std::span<const double> a, std::span<const double> b, Alternative alt, std::size_t hac_lag) {
    check_same_length(a.size(), b.size(), "dm_test");
    const std::size_t n = a.size();
    if (n < 30) throw DomainError("dm_test: need at least 30 cases");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double m = mean(d);
    // Autocovariances with denominator n; lag-0 term uses the (n - 1) sample variance.
    double var = 0.0;
    for (double x : d) var += (x - m) * (x - m);
    var /= static_cast<double>(n - 1);
    for (std::size_t l = 1; l <= hac_lag && l < n; ++l) {
        double g = 0.0;
        for (std::size_t i = l; i < n; ++i) g += (d[i] - m) * (d[i - l] - m);
        g /= static_cast<double>(n);
        var += 2.0 * (1.0 - static_cast<double>(l) / static_cast<double>(hac_lag + 1)) * g;
    }
    DmResult r;
    if (!(var > 0.0) || var < 1e-300) {
        r.degenerate = true;
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    r.statistic = std::sqrt(static_cast<double>(n)) * m / std::sqrt(var);
    switch (alt) {
        case Alternative::TwoSided:
            r.p_value = 2.0 * norm_cdf(-std::abs(r.statistic));
            break;
        case Alternative::Less:
            r.p_value = norm_cdf(r.statistic);
            break;
        case Alternative::Greater:
            r.p_value = norm_cdf(-r.statistic);
            break;
    }
    return r;
}

std::vector<bool> bh_adjust(std::span<const double> p_values, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("bh_adjust: alpha outside (0, 1)");
    const std::size_t m = p_values.size();
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("bh_adjust: p-value outside [0, 1]");
    }
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });
    std::size_t cutoff = 0;  // number of rejections
    for (std::size_t i = 0; i < m; ++i) {
        if (p_values[idx[i]] <= static_cast<double>(i + 1) * alpha / static_cast<double>(m)) cutoff = i + 1;
    }
    std::vector<bool> reject(m, false);
    for (std::size_t i = 0; i < cutoff; ++i) reject[idx[i]] = true;
    return reject;
}

ContourGrid contour_grid(const CopulaSpec& spec, const CovariateRow& row, std::size_t grid_n, double zmin,
                         double zmax) {
    if (grid_n < 2) throw DomainError("contour_grid: grid_n must be at least 2");
    ContourGrid g;
    g.z.resize(grid_n);
    for (std::size_t i = 0; i < grid_n; ++i) {
        g.z[i] = zmin + (zmax - zmin) * static_cast<double>(i) / static_cast<double>(grid_n - 1);
    }
    const double eta = spec.param_at(row);
    g.d.assign(grid_n, std::vector<double>(grid_n, 0.0));
    for (std::size_t i = 0; i < grid_n; ++i) {
        for (std::size_t j = 0; j < grid_n; ++j) {
            const double zy = g.z[i], zx = g.z[j];
            g.d[i][j] = copula_pdf(spec.family, eta, norm_cdf(zy), norm_cdf(zx)) * norm_pdf(zy) * norm_pdf(zx);
        }
    }
    return g;
}

}  // namespace gamdvqr
