#include "gamdvqr/margins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/distributions/skew_normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "gamdvqr/optimize.hpp"
#include "gamdvqr/stats.hpp"

namespace gamdvqr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kKdeGrid = 512;

double log_norm_cdf(double x) {
    if (x > -30.0) return std::log(norm_cdf(x));
    // Mills-ratio asymptotics.
    const double x2 = x * x;
    return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * kPi) + std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

double log_t_pdf(double x, double df) {
    return std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * kPi) -
           0.5 * (df + 1.0) * std::log1p(x * x / df);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool uses_unit_interval(MarginFamily f, Transform t) {
    return f == MarginFamily::Beta || t == Transform::Logit;
}

// Standardized location-scale family on the transformed scale.
struct Base {
    MarginFamily family;
    double nu;
    double phi;

    double log_pdf(double e) const {
        switch (family) {
            case MarginFamily::Normal:
                return -0.5 * e * e - 0.5 * std::log(2.0 * kPi);
            case MarginFamily::SkewNormal:
                return std::log(2.0) - 0.5 * e * e - 0.5 * std::log(2.0 * kPi) + log_norm_cdf(nu * e);
            case MarginFamily::SkewT: {
                const double g = nu;
                const double arg = e >= 0.0 ? e / g : e * g;
                return std::log(2.0 / (g + 1.0 / g)) + log_t_pdf(arg, phi);
            }
            case MarginFamily::Beta:
                break;
        }
        return -kInf;
    }

    double cdf(double e) const {
        switch (family) {
            case MarginFamily::Normal:
                return norm_cdf(e);
            case MarginFamily::SkewNormal:
                return boost::math::cdf(boost::math::skew_normal_distribution<double>(0.0, 1.0, nu), e);
            case MarginFamily::SkewT: {
                const double g2 = nu * nu;
                if (e < 0.0) return 2.0 / (g2 + 1.0) * t_cdf(e * nu, phi);
                return 1.0 / (1.0 + g2) + 2.0 * g2 / (1.0 + g2) * (t_cdf(e / nu, phi) - 0.5);
            }
            case MarginFamily::Beta:
                break;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    double quantile(double p) const {
        switch (family) {
            case MarginFamily::Normal:
                return norm_quantile(p);
            case MarginFamily::SkewNormal:
                return boost::math::quantile(boost::math::skew_normal_distribution<double>(0.0, 1.0, nu), p);
            case MarginFamily::SkewT: {
                const double g2 = nu * nu;
                const double p0 = 1.0 / (1.0 + g2);
                if (p < p0) return t_quantile(0.5 * p * (1.0 + g2), phi) / nu;
                return nu * t_quantile(0.5 + (p - p0) * (1.0 + g2) / (2.0 * g2), phi);
            }
            case MarginFamily::Beta:
                break;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }
};

double transform_value(Transform t, double y) {
    switch (t) {
        case Transform::None:
            return y;
        case Transform::Log:
            return std::log(y);
        case Transform::Logit:
            return std::log(y / (1.0 - y));
    }
    return y;
}

double transform_log_jacobian(Transform t, double y) {
    switch (t) {
        case Transform::None:
            return 0.0;
        case Transform::Log:
            return -std::log(y);
        case Transform::Logit:
            return -std::log(y) - std::log1p(-y);
    }
    return 0.0;
}

double transform_inverse(Transform t, double z) {
    switch (t) {
        case Transform::None:
            return z;
        case Transform::Log:
            return std::exp(z);
        case Transform::Logit:
            return logistic(z);
    }
    return z;
}

double linear3(const std::array<double, 3>& c, const CovariateRow& row) {
    return c[0] + c[1] * row.u_sin + c[2] * row.u_cos;
}

}  // namespace

std::string family_name(MarginFamily f) {
    switch (f) {
        case MarginFamily::Normal:
            return "Normal";
        case MarginFamily::SkewNormal:
            return "SkewNormal";
        case MarginFamily::SkewT:
            return "SkewT";
        case MarginFamily::Beta:
            return "Beta";
    }
    return "?";
}

std::string transform_name(Transform t) {
    switch (t) {
        case Transform::None:
            return "none";
        case Transform::Log:
            return "log";
        case Transform::Logit:
            return "logit";
    }
    return "?";
}

MarginFamily parse_margin_family(const std::string& s) {
    for (auto f : {MarginFamily::Normal, MarginFamily::SkewNormal, MarginFamily::SkewT, MarginFamily::Beta}) {
        if (family_name(f) == s) return f;
    }
    throw DomainError("unknown margin family: " + s);
}

Transform parse_transform(const std::string& s) {
    for (auto t : {Transform::None, Transform::Log, Transform::Logit}) {
        if (transform_name(t) == s) return t;
    }
    throw DomainError("unknown transform: " + s);
}

std::string MarginCandidate::name() const {
    if (transform == Transform::None) return family_name(family);
    return transform_name(transform) + "-" + family_name(family);
}

std::vector<MarginCandidate> candidate_set(char set_name) {
    const std::array<MarginFamily, 3> base{MarginFamily::Normal, MarginFamily::SkewNormal, MarginFamily::SkewT};
    std::vector<MarginCandidate> out;
    switch (set_name) {
        case 'A':
            for (auto f : base) out.push_back({f, Transform::None});
            break;
        case 'B':
            for (auto f : base) out.push_back({f, Transform::Logit});
            out.push_back({MarginFamily::Beta, Transform::None});
            break;
        case 'C':
            for (auto f : base) out.push_back({f, Transform::Log});
            break;
        default:
            throw DomainError(std::string("unknown margin candidate set: ") + set_name);
    }
    return out;
}

MarginModel MarginModel::normal(double mu, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("normal margin needs sigma > 0");
    MarginModel m;
    m.mu_coef = {mu, 0.0, 0.0};
    m.sigma_coef = {std::log(sigma), 0.0, 0.0};
    return m;
}

double MarginModel::mu(const CovariateRow& row) const {
    const double lin = linear3(mu_coef, row);
    return family == MarginFamily::Beta ? logistic(lin) : lin;
}

double MarginModel::sigma(const CovariateRow& row) const { return std::exp(linear3(sigma_coef, row)); }

namespace {

// Maps y into the fitted scale (compression for boundary data) and checks the domain.
double prepare_y(const MarginModel& m, double y) {
    if (!std::isfinite(y)) throw DomainError("margin: non-finite value");
    const bool unit = uses_unit_interval(m.family, m.transform);
    if (m.boundary_n > 0) {
        if (y < 0.0 || y > 1.0) throw DomainError("margin: value outside [0, 1]");
        const double n = static_cast<double>(m.boundary_n);
        y = (y * (n - 1.0) + 0.5) / n;
    }
    if (unit && (y <= 0.0 || y >= 1.0)) throw DomainError("margin: value outside (0, 1) for " + m.describe());
    if (m.transform == Transform::Log && y <= 0.0) throw DomainError("margin: non-positive value for log transform");
    return y;
}

double unprepare_y(const MarginModel& m, double y) {
    if (m.boundary_n > 0) {
        const double n = static_cast<double>(m.boundary_n);
        y = std::clamp((y * n - 0.5) / (n - 1.0), 0.0, 1.0);
    }
    return y;
}

double beta_a(double mu, double sigma) { return mu / sigma; }
double beta_b(double mu, double sigma) { return (1.0 - mu) / sigma; }

}  // namespace

double MarginModel::cdf(double y, const CovariateRow& row) const {
    if (kind == MarginKind::KDE) {
        if (!std::isfinite(y)) throw DomainError("margin: non-finite value");
        return kde_cdf(y);
    }
    const double ye = prepare_y(*this, y);
    if (family == MarginFamily::Beta) {
        const double m = mu(row), s = sigma(row);
        return boost::math::ibeta(beta_a(m, s), beta_b(m, s), ye);
    }
    const Base base{family, nu, phi};
    return base.cdf((transform_value(transform, ye) - mu(row)) / sigma(row));
}

double MarginModel::quantile(double p, const CovariateRow& row) const {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("margin quantile: p outside (0, 1)");
    if (kind == MarginKind::KDE) return kde_quantile(p);
    double ye;
    if (family == MarginFamily::Beta) {
        const double m = mu(row), s = sigma(row);
        ye = boost::math::ibeta_inv(beta_a(m, s), beta_b(m, s), p);
    } else {
        const Base base{family, nu, phi};
        ye = transform_inverse(transform, mu(row) + sigma(row) * base.quantile(p));
    }
    return unprepare_y(*this, ye);
}

double MarginModel::log_pdf(double y, const CovariateRow& row) const {
    if (kind == MarginKind::KDE) {
        if (!std::isfinite(y)) throw DomainError("margin: non-finite value");
        double s = 0.0;
        for (double x : kde_samples) s += norm_pdf((y - x) / bandwidth);
        return std::log(s / (static_cast<double>(kde_samples.size()) * bandwidth));
    }
    const double ye = prepare_y(*this, y);
    double lp;
    if (family == MarginFamily::Beta) {
        const double m = mu(row), s = sigma(row);
        const double a = beta_a(m, s), b = beta_b(m, s);
        lp = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(ye) +
             (b - 1.0) * std::log1p(-ye);
    } else {
        const Base base{family, nu, phi};
        const double s = sigma(row);
        lp = base.log_pdf((transform_value(transform, ye) - mu(row)) / s) - std::log(s) +
             transform_log_jacobian(transform, ye);
    }
    if (boundary_n > 0) {
        const double n = static_cast<double>(boundary_n);
        lp += std::log((n - 1.0) / n);
    }
    return lp;
}

double MarginModel::pdf(double y, const CovariateRow& row) const { return std::exp(log_pdf(y, row)); }

void MarginModel::build_kde_cache() {
    grid_x_.clear();
    grid_cdf_.clear();
    if (kind != MarginKind::KDE) return;
    std::sort(kde_samples.begin(), kde_samples.end());
    const double lo = kde_samples.front() - 5.0 * bandwidth;
    const double hi = kde_samples.back() + 5.0 * bandwidth;
    grid_x_.resize(kKdeGrid);
    grid_cdf_.resize(kKdeGrid);
    for (int i = 0; i < kKdeGrid; ++i) {
        grid_x_[i] = lo + (hi - lo) * i / (kKdeGrid - 1);
        grid_cdf_[i] = kde_cdf(grid_x_[i]);
    }
}

double MarginModel::kde_cdf(double y) const {
    // Kernels further than 9 bandwidths away contribute exactly 0 or 1 in double precision.
    const auto first = std::lower_bound(kde_samples.begin(), kde_samples.end(), y - 9.0 * bandwidth);
    const auto last = std::upper_bound(first, kde_samples.end(), y + 9.0 * bandwidth);
    double s = static_cast<double>(first - kde_samples.begin());
    for (auto it = first; it != last; ++it) s += norm_cdf((y - *it) / bandwidth);
    return s / static_cast<double>(kde_samples.size());
}

double MarginModel::kde_quantile(double p) const {
    const double n = static_cast<double>(kde_samples.size());
    auto pdf_at = [&](double y) {
        const auto first = std::lower_bound(kde_samples.begin(), kde_samples.end(), y - 9.0 * bandwidth);
        const auto last = std::upper_bound(first, kde_samples.end(), y + 9.0 * bandwidth);
        double s = 0.0;
        for (auto it = first; it != last; ++it) s += norm_pdf((y - *it) / bandwidth);
        return s / (n * bandwidth);
    };
    double lo, hi;
    if (!grid_cdf_.empty() && p >= grid_cdf_.front() && p <= grid_cdf_.back()) {
        const auto it = std::lower_bound(grid_cdf_.begin(), grid_cdf_.end(), p);
        const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - grid_cdf_.begin()));
        lo = grid_x_[i - 1];
        hi = grid_x_[i];
    } else {
        lo = kde_samples.front() - 5.0 * bandwidth;
        hi = kde_samples.back() + 5.0 * bandwidth;
        double step = hi - lo;
        while (kde_cdf(lo) > p) lo -= (step *= 2.0);
        step = hi - lo;
        while (kde_cdf(hi) < p) hi += (step *= 2.0);
    }
    // Safeguarded Newton inside the bracket.
    double flo = kde_cdf(lo) - p;
    double x = flo == 0.0 ? lo : 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double fx = kde_cdf(x) - p;
        if (fx == 0.0) return x;
        if ((fx < 0.0) == (flo < 0.0)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        const double d = pdf_at(x);
        double next = d > 0.0 ? x - fx / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-13 * (1.0 + std::abs(x)) || hi - lo <= 1e-13 * (1.0 + std::abs(x))) {
            return next;
        }
        x = next;
    }
    return x;
}

std::string MarginModel::describe() const {
    if (kind == MarginKind::KDE) return "KDE";
    return MarginCandidate{family, transform}.name();
}

double margin_cdf(const MarginModel& m, double y, const CovariateRow& row) { return m.cdf(y, row); }
double margin_quantile(const MarginModel& m, double p, const CovariateRow& row) { return m.quantile(p, row); }

MarginModel fit_margin_family(std::span<const double> samples, std::span<const CovariateRow> rows,
                              const MarginCandidate& candidate) {
    const std::size_t n = samples.size();
    if (rows.size() != n) throw DomainError("fit_margin: samples and rows differ in length");
    if (n < 3) throw DomainError("fit_margin: too few samples");

    MarginModel model;
    model.family = candidate.family;
    model.transform = candidate.transform;
    model.n_obs = n;

    const bool unit = uses_unit_interval(candidate.family, candidate.transform);
    std::vector<double> ye(samples.begin(), samples.end());
    for (double y : ye) {
        if (!std::isfinite(y)) throw DomainError("fit_margin: non-finite sample");
        if (candidate.transform == Transform::Log && y <= 0.0) {
            throw DomainError("fit_margin: non-positive sample for log transform");
        }
        if (unit && (y < 0.0 || y > 1.0)) throw DomainError("fit_margin: sample outside [0, 1]");
    }
    if (unit && std::any_of(ye.begin(), ye.end(), [](double y) { return y <= 0.0 || y >= 1.0; })) {
        model.boundary_n = n;
        const double nd = static_cast<double>(n);
        for (double& y : ye) y = (y * (nd - 1.0) + 0.5) / nd;
    }

    // Ordinary least squares start on the (link-)transformed scale.
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), 3);
    Eigen::VectorXd z(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        X(r, 0) = 1.0;
        X(r, 1) = rows[i].u_sin;
        X(r, 2) = rows[i].u_cos;
        const double t = candidate.family == MarginFamily::Beta ? std::log(ye[i] / (1.0 - ye[i]))
                                                                 : transform_value(candidate.transform, ye[i]);
        z(r) = t;
    }
    const Eigen::VectorXd a = X.colPivHouseholderQr().solve(z);
    const Eigen::VectorXd resid = z - X * a;
    const double rsd = std::sqrt(resid.squaredNorm() / static_cast<double>(std::max<std::size_t>(n - 3, 1)));
    if (!(rsd > 0.0) || !std::isfinite(rsd)) throw DomainError("fit_margin: degenerate (zero-variance) sample");

    std::vector<double> theta{a(0), a(1), a(2), std::log(rsd), 0.0, 0.0};
    if (candidate.family == MarginFamily::Beta) {
        const double m = mean(ye);
        const double v = sample_sd(ye) * sample_sd(ye);
        const double disp = m * (1.0 - m) > v ? v / (m * (1.0 - m) - v) : 0.1;
        theta[3] = std::log(disp);
    } else if (candidate.family == MarginFamily::SkewNormal) {
        theta.push_back(0.0);
    } else if (candidate.family == MarginFamily::SkewT) {
        theta.push_back(0.0);             // log gamma
        theta.push_back(std::log(9.0));  // log(df - 1)
    }

    auto unpack = [&](std::span<const double> th, MarginModel& m) {
        m.mu_coef = {th[0], th[1], th[2]};
        m.sigma_coef = {th[3], th[4], th[5]};
        if (m.family == MarginFamily::SkewNormal) m.nu = th[6];
        if (m.family == MarginFamily::SkewT) {
            m.nu = std::exp(th[6]);
            m.phi = 1.0 + std::exp(th[7]);
        }
    };

    const std::vector<double> y_orig(samples.begin(), samples.end());
    auto negll = [&](std::span<const double> th) {
        MarginModel m = model;
        for (double v : th) {
            if (!std::isfinite(v)) return kInf;
        }
        if (m.family == MarginFamily::SkewT && (std::abs(th[6]) > 5.0 || th[7] > 6.0)) return kInf;
        unpack(th, m);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += m.log_pdf(y_orig[i], rows[i]);
        return std::isfinite(s) ? -s / static_cast<double>(n) : kInf;
    };

    BfgsOptions opts;
    opts.max_iter = 500;
    opts.grad_tol = 1e-7;
    const BfgsResult res = minimize_bfgs(negll, theta, opts);
    if (!std::isfinite(res.value)) throw ConvergenceError("fit_margin: non-finite likelihood");
    unpack(res.x, model);
    model.loglik = -res.value * static_cast<double>(n);
    model.bic = -2.0 * model.loglik + static_cast<double>(res.x.size()) * std::log(static_cast<double>(n));
    return model;
}

MarginModel fit_margin(std::span<const double> samples, std::span<const CovariateRow> rows,
                       std::span<const MarginCandidate> candidates) {
    if (samples.size() < 50) throw DomainError("fit_margin: need at least 50 samples");
    if (candidates.empty()) throw DomainError("fit_margin: empty candidate set");
    MarginModel best;
    bool found = false;
    std::ostringstream failures;
    for (const auto& c : candidates) {
        try {
            MarginModel m = fit_margin_family(samples, rows, c);
            if (!found || m.bic < best.bic) {
                best = std::move(m);
                found = true;
            }
        } catch (const std::exception& e) {
            failures << (failures.tellp() > 0 ? "; " : "") << c.name() << " (" << e.what() << ")";
        }
    }
    if (!found) throw DomainError("fit_margin: all candidates failed: " + failures.str());
    return best;
}

MarginModel kde_fit(std::span<const double> samples) {
    if (samples.size() < 10) throw DomainError("kde_fit: need at least 10 samples");
    for (double y : samples) {
        if (!std::isfinite(y)) throw DomainError("kde_fit: non-finite sample");
    }
    const double sd = sample_sd(samples);
    if (!(sd > 0.0)) throw DomainError("kde_fit: zero-variance sample");
    std::vector<double> v(samples.begin(), samples.end());
    const double iqr = empirical_quantile(v, 0.75) - empirical_quantile(v, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    const double n = static_cast<double>(samples.size());

    MarginModel m;
    m.kind = MarginKind::KDE;
    m.kde_samples = std::move(v);
    m.bandwidth = 0.9 * spread * std::pow(n, -0.2);
    m.n_obs = samples.size();
    m.build_kde_cache();
    double ll = 0.0;
    for (double y : m.kde_samples) ll += m.log_pdf(y, CovariateRow{});
    m.loglik = ll;
    m.bic = -2.0 * ll;
    return m;
}

}  // namespace gamdvqr
