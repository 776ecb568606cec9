#include "gamdvqr/emos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gamdvqr/optimize.hpp"
#include "gamdvqr/stats.hpp"
#include "gamdvqr/verification.hpp"

namespace gamdvqr {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695;

// Per-case loss and its derivatives with respect to mu and eta = log sigma.
struct LossGrad {
    double loss, d_mu, d_eta;
};

LossGrad loss_and_grad(EmosLoss loss, double mu, double eta, double y) {
    const double sigma = std::exp(eta);
    const double z = (y - mu) / sigma;
    if (loss == EmosLoss::CRPS) {
        const double Phi = norm_cdf(z), phi = norm_pdf(z);
        const double crps = sigma * (z * (2.0 * Phi - 1.0) + 2.0 * phi - kInvSqrtPi);
        return {crps, -(2.0 * Phi - 1.0), sigma * (2.0 * phi - kInvSqrtPi)};
    }
    return {0.5 * z * z + eta + 0.5 * std::log(2.0 * kPi), -z / sigma, 1.0 - z * z};
}

std::vector<std::size_t> resolve(const std::vector<std::string>& wanted, const std::vector<std::string>& names) {
    std::vector<std::size_t> idx;
    if (wanted.empty()) {
        for (std::size_t j = 0; j < names.size(); ++j) idx.push_back(j);
        return idx;
    }
    for (const auto& w : wanted) {
        const auto it = std::find(names.begin(), names.end(), w);
        if (it == names.end()) throw DomainError("emos: unknown predictor " + w);
        idx.push_back(static_cast<std::size_t>(it - names.begin()));
    }
    return idx;
}

void check_data(const EmosData& d, std::size_t min_n) {
    if (static_cast<std::size_t>(d.x.rows()) != d.y.size()) throw DomainError("emos: x and y differ in length");
    if (static_cast<std::size_t>(d.x.cols()) != d.names.size()) throw DomainError("emos: one name per column");
    if (d.y.size() < min_n) throw DomainError("emos: need at least " + std::to_string(min_n) + " cases");
    for (double v : d.y) {
        if (!std::isfinite(v)) throw DomainError("emos: non-finite observation");
    }
    if (!d.x.allFinite()) throw DomainError("emos: non-finite predictor");
}

double linear(const std::vector<double>& coef, const std::vector<double>& center, const std::vector<double>& scale,
              std::span<const double> x) {
    double s = coef[0];
    for (std::size_t j = 0; j + 1 < coef.size(); ++j) {
        if (coef[j + 1] != 0.0) s += coef[j + 1] * (x[j] - center[j]) / scale[j];
    }
    return s;
}

}  // namespace

std::string loss_name(EmosLoss loss) { return loss == EmosLoss::CRPS ? "CRPS" : "LogS"; }

EmosLoss parse_loss(const std::string& s) {
    if (s == "CRPS" || s == "crps") return EmosLoss::CRPS;
    if (s == "LogS" || s == "logs") return EmosLoss::LogS;
    throw DomainError("unknown loss: " + s);
}

double EmosModel::mu(std::span<const double> x) const {
    if (x.size() != names.size()) throw DomainError("emos: expected " + std::to_string(names.size()) + " predictors");
    return linear(mu_coef, center, scale, x);
}

double EmosModel::sigma(std::span<const double> x) const {
    if (x.size() != names.size()) throw DomainError("emos: expected " + std::to_string(names.size()) + " predictors");
    return std::exp(linear(sigma_coef, center, scale, x));
}

double EmosModel::quantile(std::span<const double> x, double alpha) const {
    return mu(x) + sigma(x) * norm_quantile(alpha);
}

double emos_mean_loss(const EmosModel& m, const EmosData& data, EmosLoss loss) {
    double s = 0.0;
    std::vector<double> row(data.names.size());
    for (std::size_t i = 0; i < data.y.size(); ++i) {
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        s += loss_and_grad(loss, m.mu(row), std::log(m.sigma(row)), data.y[i]).loss;
    }
    return s / static_cast<double>(data.y.size());
}

EmosOptions seasonal_emos_options(const std::string& mean_name, const std::string& sd_name, EmosLoss loss) {
    EmosOptions o;
    o.loss = loss;
    o.mu_predictors = {"sin", "cos", mean_name};
    o.sigma_predictors = {"sin", "cos", sd_name};
    return o;
}

EmosModel fit_emos(const EmosData& data, const EmosOptions& opts) {
    check_data(data, 100);
    const auto mu_idx = resolve(opts.mu_predictors, data.names);
    const auto sg_idx = resolve(opts.sigma_predictors, data.names);
    const std::size_t n = data.y.size();
    const std::size_t pm = mu_idx.size() + 1, ps = sg_idx.size() + 1;

    Eigen::MatrixXd Xm(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pm));
    Eigen::MatrixXd Xs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ps));
    Xm.col(0).setOnes();
    Xs.col(0).setOnes();
    for (std::size_t k = 0; k < mu_idx.size(); ++k) Xm.col(static_cast<Eigen::Index>(k + 1)) = data.x.col(static_cast<Eigen::Index>(mu_idx[k]));
    for (std::size_t k = 0; k < sg_idx.size(); ++k) Xs.col(static_cast<Eigen::Index>(k + 1)) = data.x.col(static_cast<Eigen::Index>(sg_idx[k]));
    const Eigen::Map<const Eigen::VectorXd> y(data.y.data(), static_cast<Eigen::Index>(n));

    // Least-squares start for mu, residual scale for the log-sigma intercept.
    const Eigen::VectorXd a = Xm.colPivHouseholderQr().solve(y);
    const double rss = (y - Xm * a).squaredNorm();
    const double sd0 = std::sqrt(std::max(rss / static_cast<double>(n), 1e-12));
    std::vector<double> theta(pm + ps, 0.0);
    for (std::size_t k = 0; k < pm; ++k) theta[k] = a(static_cast<Eigen::Index>(k));
    theta[pm] = std::log(sd0);

    const double inv_n = 1.0 / static_cast<double>(n);
    auto evaluate = [&](std::span<const double> th, std::span<double> grad) {
        const Eigen::Map<const Eigen::VectorXd> am(th.data(), static_cast<Eigen::Index>(pm));
        const Eigen::Map<const Eigen::VectorXd> bm(th.data() + pm, static_cast<Eigen::Index>(ps));
        const Eigen::VectorXd mu = Xm * am;
        const Eigen::VectorXd eta = Xs * bm;
        double total = 0.0;
        Eigen::VectorXd gm(static_cast<Eigen::Index>(n)), ge(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
            if (!std::isfinite(eta(i)) || eta(i) > 700.0) return std::numeric_limits<double>::infinity();
            const LossGrad lg = loss_and_grad(opts.loss, mu(i), eta(i), y(i));
            total += lg.loss;
            gm(i) = lg.d_mu;
            ge(i) = lg.d_eta;
        }
        if (!grad.empty()) {
            const Eigen::VectorXd g1 = Xm.transpose() * gm * inv_n;
            const Eigen::VectorXd g2 = Xs.transpose() * ge * inv_n;
            for (std::size_t k = 0; k < pm; ++k) grad[k] = g1(static_cast<Eigen::Index>(k));
            for (std::size_t k = 0; k < ps; ++k) grad[pm + k] = g2(static_cast<Eigen::Index>(k));
        }
        return total * inv_n;
    };
    const Objective f = [&](std::span<const double> th) { return evaluate(th, {}); };
    const GradientFn g = [&](std::span<const double> th, std::span<double> out) { evaluate(th, out); };

    BfgsOptions bo;
    bo.max_iter = opts.max_iter;
    bo.rel_tol = opts.rel_tol;
    bo.grad_tol = 1e-10;
    const BfgsResult res = minimize_bfgs(f, theta, bo, g);

    EmosModel m;
    m.names = data.names;
    m.loss = opts.loss;
    m.center.assign(data.names.size(), 0.0);
    m.scale.assign(data.names.size(), 1.0);
    m.mu_coef.assign(data.names.size() + 1, 0.0);
    m.sigma_coef.assign(data.names.size() + 1, 0.0);
    m.mu_coef[0] = res.x[0];
    for (std::size_t k = 0; k < mu_idx.size(); ++k) m.mu_coef[mu_idx[k] + 1] = res.x[k + 1];
    m.sigma_coef[0] = res.x[pm];
    for (std::size_t k = 0; k < sg_idx.size(); ++k) m.sigma_coef[sg_idx[k] + 1] = res.x[pm + k + 1];
    m.train_loss = res.value;
    m.iterations = res.iterations;
    m.converged = res.converged;
    m.message = res.message;
    return m;
}

EmosGbResult fit_emos_gb(const EmosData& data, const EmosGbOptions& opts) {
    check_data(data, 2);
    if (opts.max_iter < 0) throw DomainError("emos-gb: max_iter must be nonnegative");
    if (opts.step < 0.0) throw DomainError("emos-gb: step must be nonnegative");
    const std::size_t n = data.y.size(), p = data.names.size();
    const double nd = static_cast<double>(n);

    EmosGbResult out;
    EmosModel& m = out.model;
    m.names = data.names;
    m.loss = opts.loss;
    m.boosted = true;
    m.center.assign(p, 0.0);
    m.scale.assign(p, 1.0);

    // Standardized design with a leading column of ones.
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p + 1));
    Z.col(0).setOnes();
    std::vector<bool> usable(p + 1, true);
    for (std::size_t j = 0; j < p; ++j) {
        const auto c = static_cast<Eigen::Index>(j);
        const double mean_j = data.x.col(c).mean();
        const double sd_j = std::sqrt((data.x.col(c).array() - mean_j).square().sum() / std::max(nd - 1.0, 1.0));
        m.center[j] = mean_j;
        if (!(sd_j > 0.0)) {
            usable[j + 1] = false;
            out.skipped.push_back(data.names[j]);
            Z.col(c + 1).setZero();
            continue;
        }
        m.scale[j] = sd_j;
        Z.col(c + 1) = (data.x.col(c).array() - mean_j) / sd_j;
    }
    const Eigen::Map<const Eigen::VectorXd> y(data.y.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd col_sq = Z.colwise().squaredNorm();

    // Unconditional maximum-likelihood start.
    const double mu0 = y.mean();
    const double sd0 = std::sqrt(std::max((y.array() - mu0).square().mean(), 1e-24));
    Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p + 1));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p + 1));
    a(0) = mu0;
    b(0) = std::log(sd0);

    Eigen::VectorXd gm(static_cast<Eigen::Index>(n)), ge(static_cast<Eigen::Index>(n));
    auto mean_loss = [&](const Eigen::VectorXd& mu, const Eigen::VectorXd& eta, bool with_grad) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
            const LossGrad lg = loss_and_grad(opts.loss, mu(i), eta(i), y(i));
            s += lg.loss;
            if (with_grad) {
                gm(i) = lg.d_mu;
                ge(i) = lg.d_eta;
            }
        }
        return s / nd;
    };
    auto info = [&](const Eigen::VectorXd& mu, const Eigen::VectorXd& eta) {
        double ll = 0.0;
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) ll -= logs_normal(mu(i), std::exp(eta(i)), y(i));
        double df = 0.0;
        for (Eigen::Index j = 0; j <= static_cast<Eigen::Index>(p); ++j) df += (a(j) != 0.0) + (b(j) != 0.0);
        const double pen = opts.stop == InfoCriterion::AIC ? 2.0 : std::log(nd);
        return -2.0 * ll + pen * df;
    };

    Eigen::VectorXd mu = Z * a, eta = Z * b;
    double cur = mean_loss(mu, eta, true);
    out.loss_path.push_back(cur);
    out.ic_path.push_back(info(mu, eta));
    Eigen::VectorXd best_a = a, best_b = b;
    double best_ic = out.ic_path.back();

    // Column most correlated with the negative gradient g of one block; the
    // coefficient is the least-squares fit of the working residual w on it.
    auto choose = [&](const Eigen::VectorXd& g, const Eigen::VectorXd& w, std::size_t& j_best, double& coef) {
        const double gn = g.norm();
        if (!(gn > 0.0)) return false;
        const Eigen::VectorXd zg = Z.transpose() * g;
        double best = -1.0;
        for (std::size_t j = 0; j <= p; ++j) {
            if (!usable[j]) continue;
            const double c = std::abs(zg(static_cast<Eigen::Index>(j))) /
                             (gn * std::sqrt(col_sq(static_cast<Eigen::Index>(j))));
            if (c > best) {
                best = c;
                j_best = j;
            }
        }
        const auto jb = static_cast<Eigen::Index>(j_best);
        coef = Z.col(jb).dot(w) / col_sq(jb);
        return true;
    };

    // Working residuals: negative gradient over the expected per-row curvature
    // of the loss, so that a unit step is a Fisher-scoring step.
    Eigen::VectorXd wm(static_cast<Eigen::Index>(n)), we(static_cast<Eigen::Index>(n));
    auto working = [&] {
        const double rpi = std::sqrt(kPi);
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
            const double sigma = std::exp(eta(i));
            const double hm = opts.loss == EmosLoss::LogS ? 1.0 / (sigma * sigma) : 1.0 / (sigma * rpi);
            const double he = opts.loss == EmosLoss::LogS ? 2.0 : sigma / (2.0 * rpi);
            wm(i) = -gm(i) / hm;
            we(i) = -ge(i) / he;
        }
    };

    for (int it = 1; it <= opts.max_iter; ++it) {
        std::size_t jm = 0, js = 0;
        double cm = 0.0, cs = 0.0;
        working();
        const bool ok_m = choose(-gm, wm, jm, cm);
        const bool ok_s = choose(-ge, we, js, cs);
        double loss_m = std::numeric_limits<double>::infinity(), loss_s = loss_m;
        if (ok_m) loss_m = mean_loss(mu + opts.step * cm * Z.col(static_cast<Eigen::Index>(jm)), eta, false);
        if (ok_s) loss_s = mean_loss(mu, eta + opts.step * cs * Z.col(static_cast<Eigen::Index>(js)), false);
        if (!ok_m && !ok_s) break;
        if (loss_m <= loss_s) {
            a(static_cast<Eigen::Index>(jm)) += opts.step * cm;
            mu += opts.step * cm * Z.col(static_cast<Eigen::Index>(jm));
            out.path.push_back({false, jm});
        } else {
            b(static_cast<Eigen::Index>(js)) += opts.step * cs;
            eta += opts.step * cs * Z.col(static_cast<Eigen::Index>(js));
            out.path.push_back({true, js});
        }
        cur = mean_loss(mu, eta, true);
        out.loss_path.push_back(cur);
        const double ic = info(mu, eta);
        out.ic_path.push_back(ic);
        if (ic < best_ic) {
            best_ic = ic;
            best_a = a;
            best_b = b;
            out.best_iteration = it;
        }
    }

    m.mu_coef.assign(best_a.data(), best_a.data() + best_a.size());
    m.sigma_coef.assign(best_b.data(), best_b.data() + best_b.size());
    m.iterations = static_cast<int>(out.path.size());
    m.train_loss = out.loss_path[static_cast<std::size_t>(out.best_iteration)];
    return out;
}

}  // namespace gamdvqr
