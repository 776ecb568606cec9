#include "gamdvqr/pair_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "gamdvqr/stats.hpp"

namespace gamdvqr {

namespace {

constexpr double kTauMargin = 1e-4;

double unit_clamp(double x) { return std::clamp(x, kUnitClamp, 1.0 - kUnitClamp); }

// Evaluates pair log-likelihoods for many coefficient vectors on fixed data.
// Normal / Student-t scores of the data are computed once.
class PairLikelihood {
public:
    PairLikelihood(std::span<const UnitPair> pairs, std::span<const CovariateRow> rows, DesignKind kind,
                   const SplineConfig& spline)
        : pairs_(pairs), design_(build_design(rows, kind, spline)) {}

    std::size_t n() const { return pairs_.size(); }
    Eigen::Index width() const { return design_.cols(); }

    double loglik(const CopulaFamily& fam, std::span<const double> beta) const {
        if (fam.kind == CopulaKind::Independence) return 0.0;
        const Eigen::VectorXd lin = design_ * as_vector(beta);
        RowEval eval(*this, fam);
        double total = 0.0;
        for (std::size_t i = 0; i < pairs_.size(); ++i) total += eval(i, lin(static_cast<Eigen::Index>(i)));
        return total;
    }

    // Log-likelihood and its gradient in beta. Each row depends on beta only
    // through its linear predictor, so one central difference per row suffices.
    double loglik_grad(const CopulaFamily& fam, std::span<const double> beta, Eigen::VectorXd& grad) const {
        grad = Eigen::VectorXd::Zero(design_.cols());
        if (fam.kind == CopulaKind::Independence) return 0.0;
        constexpr double h = 1e-6;
        const Eigen::VectorXd lin = design_ * as_vector(beta);
        RowEval at(*this, fam), up(*this, fam), down(*this, fam);
        Eigen::VectorXd g(static_cast<Eigen::Index>(pairs_.size()));
        double total = 0.0;
        for (std::size_t i = 0; i < pairs_.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            total += at(i, lin(k));
            g(k) = (up(i, lin(k) + h) - down(i, lin(k) - h)) / (2.0 * h);
        }
        grad = design_.transpose() * g;
        return total;
    }

private:
    static Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> beta) {
        return {beta.data(), static_cast<Eigen::Index>(beta.size())};
    }

    // Row log-density at a given linear predictor, caching the last tau -> eta map.
    class RowEval {
    public:
        RowEval(const PairLikelihood& lik, const CopulaFamily& fam) : lik_(lik), fam_(fam) {
            if (fam.kind == CopulaKind::Gaussian) scores_ = &lik.normal_scores();
            if (fam.kind == CopulaKind::StudentT) scores_ = &lik.t_scores(fam.df);
        }
        double operator()(std::size_t i, double lp) {
            const double tau = clamp_tau(fam_, link_tau(lp));
            if (tau != last_tau_) {
                last_eta_ = tau_to_param(fam_, tau);
                last_tau_ = tau;
            }
            if (fam_.kind == CopulaKind::Gaussian) {
                return gaussian_log_density_scores((*scores_)[i][0], (*scores_)[i][1], last_eta_);
            }
            if (fam_.kind == CopulaKind::StudentT) {
                return student_t_log_density_scores((*scores_)[i][0], (*scores_)[i][1], last_eta_, fam_.df);
            }
            return copula_log_pdf(fam_, last_eta_, lik_.pairs_[i][0], lik_.pairs_[i][1]);
        }

    private:
        const PairLikelihood& lik_;
        const CopulaFamily& fam_;
        const std::vector<UnitPair>* scores_ = nullptr;
        double last_tau_ = std::numeric_limits<double>::quiet_NaN();
        double last_eta_ = 0.0;
    };

    const std::vector<UnitPair>& normal_scores() const {
        if (normal_.empty()) {
            normal_.reserve(pairs_.size());
            for (const auto& p : pairs_) {
                normal_.push_back({norm_quantile(unit_clamp(p[0])), norm_quantile(unit_clamp(p[1]))});
            }
        }
        return normal_;
    }
    const std::vector<UnitPair>& t_scores(double df) const {
        auto it = t_.find(df);
        if (it == t_.end()) {
            std::vector<UnitPair> s;
            s.reserve(pairs_.size());
            for (const auto& p : pairs_) {
                s.push_back({t_quantile(unit_clamp(p[0]), df), t_quantile(unit_clamp(p[1]), df)});
            }
            it = t_.emplace(df, std::move(s)).first;
        }
        return it->second;
    }

    std::span<const UnitPair> pairs_;
    Eigen::MatrixXd design_;
    mutable std::vector<UnitPair> normal_;
    mutable std::map<double, std::vector<UnitPair>> t_;
};

// Fits coefficients for one family and one penalty value.
CopulaSpec fit_one(const PairLikelihood& lik, const CopulaFamily& fam, const PairFitOptions& opts,
                   double lambda, double tau_init, std::span<const std::size_t> fixed_zero) {
    const auto d = static_cast<std::size_t>(lik.width());
    const double n = static_cast<double>(lik.n());
    const bool spline = opts.design == DesignKind::CyclicSpline;
    const Eigen::MatrixXd penalty = spline ? cyclic_difference_penalty(opts.spline.n_basis)
                                           : Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                                                   static_cast<Eigen::Index>(d));

    // Free coefficients are optimized; fixed ones stay at zero.
    std::vector<std::size_t> free_idx;
    for (std::size_t j = 0; j < d; ++j) {
        if (std::find(fixed_zero.begin(), fixed_zero.end(), j) == fixed_zero.end()) free_idx.push_back(j);
    }
    auto expand = [&](std::span<const double> free) {
        std::vector<double> beta(d, 0.0);
        for (std::size_t k = 0; k < free_idx.size(); ++k) beta[free_idx[k]] = free[k];
        return beta;
    };
    auto neg_pll = [&](std::span<const double> free) {
        const auto beta = expand(free);
        double obj = -lik.loglik(fam, beta);
        if (spline && lambda > 0.0) {
            const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(d));
            obj += 0.5 * lambda * b.dot(penalty * b);
        }
        return obj;
    };
    auto neg_pll_grad = [&](std::span<const double> free, std::span<double> out) {
        const auto beta = expand(free);
        Eigen::VectorXd g;
        lik.loglik_grad(fam, beta, g);
        g = -g;
        if (spline && lambda > 0.0) {
            const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(d));
            g += lambda * (penalty * b);
        }
        for (std::size_t k = 0; k < free_idx.size(); ++k) out[k] = g(static_cast<Eigen::Index>(free_idx[k]));
    };

    // Start at the constant-correlation solution implied by the empirical tau.
    // With a partition-of-unity spline basis that means all coefficients equal.
    const double a0 = inverse_link_tau(clamp_tau(fam, tau_init));
    std::vector<double> x0;
    for (std::size_t j : free_idx) {
        x0.push_back((j == 0 || spline) ? a0 : 0.0);
    }

    const BfgsResult res = minimize_bfgs(neg_pll, x0, opts.bfgs, neg_pll_grad);

    CopulaSpec spec;
    spec.family = fam;
    spec.tau_model.kind = opts.design;
    spec.tau_model.spline = opts.spline;
    spec.tau_model.penalty = spline ? lambda : 0.0;
    spec.tau_model.coefficients = expand(res.x);
    spec.n_obs = lik.n();
    spec.loglik = lik.loglik(fam, spec.tau_model.coefficients);
    if (!std::isfinite(spec.loglik)) throw ConvergenceError("non-finite log-likelihood at optimum");

    double k = static_cast<double>(free_idx.size());
    if (spline && lambda > 0.0 && !free_idx.empty()) {
        // Effective degrees of freedom tr((H + lambda S)^-1 H), H the observed
        // information of the unpenalized likelihood.
        const auto m_free = static_cast<Eigen::Index>(free_idx.size());
        auto nll_grad = [&](std::vector<double> free) {
            Eigen::VectorXd g;
            lik.loglik_grad(fam, expand(free), g);
            Eigen::VectorXd out(m_free);
            for (Eigen::Index k = 0; k < m_free; ++k) out(k) = -g(static_cast<Eigen::Index>(free_idx[static_cast<std::size_t>(k)]));
            return out;
        };
        constexpr double step = 1e-4;
        Eigen::MatrixXd h(m_free, m_free);
        for (Eigen::Index k = 0; k < m_free; ++k) {
            auto xp = res.x, xm = res.x;
            xp[static_cast<std::size_t>(k)] += step;
            xm[static_cast<std::size_t>(k)] -= step;
            h.col(k) = (nll_grad(xp) - nll_grad(xm)) / (2.0 * step);
        }
        h = 0.5 * (h + h.transpose()).eval();
        Eigen::MatrixXd s(static_cast<Eigen::Index>(free_idx.size()), static_cast<Eigen::Index>(free_idx.size()));
        for (std::size_t a = 0; a < free_idx.size(); ++a) {
            for (std::size_t b = 0; b < free_idx.size(); ++b) {
                s(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    penalty(static_cast<Eigen::Index>(free_idx[a]), static_cast<Eigen::Index>(free_idx[b]));
            }
        }
        const Eigen::MatrixXd m = h + lambda * s;
        const double edf = m.ldlt().solve(h).trace();
        if (std::isfinite(edf)) k = std::clamp(edf, 1.0, k);
    }
    if (fam.kind == CopulaKind::StudentT) k += 1.0;
    spec.n_params = k;
    spec.bic = -2.0 * spec.loglik + k * std::log(n);
    return spec;
}

std::vector<CopulaFamily> expand_families(const PairFitOptions& opts, double tau_emp) {
    std::vector<CopulaFamily> out;
    for (CopulaKind kind : opts.families) {
        switch (kind) {
            case CopulaKind::Independence: break;
            case CopulaKind::Gaussian: out.push_back(CopulaFamily::gaussian()); break;
            case CopulaKind::Frank: out.push_back(CopulaFamily::frank()); break;
            case CopulaKind::StudentT:
                for (double df : opts.df_grid) out.push_back(CopulaFamily::student_t(df));
                break;
            case CopulaKind::Clayton:
            case CopulaKind::Gumbel: {
                const Rotation r = tau_emp >= 0.0 ? Rotation::R0 : Rotation::R90;
                const Rotation partner = tau_emp >= 0.0 ? Rotation::R180 : Rotation::R270;
                out.push_back({kind, r, 0.0});
                out.push_back({kind, partner, 0.0});
                break;
            }
        }
    }
    return out;
}

}  // namespace

CopulaSpec CopulaSpec::independence(std::size_t n) {
    CopulaSpec s;
    s.family = CopulaFamily::independence();
    s.tau_model = TauModel::constant(0.0);
    s.n_obs = n;
    return s;
}

double CopulaSpec::tau_at(const CovariateRow& row) const {
    if (family.kind == CopulaKind::Independence) return 0.0;
    return clamp_tau(family, tau_model.tau(row));
}

double CopulaSpec::param_at(const CovariateRow& row) const {
    if (family.kind == CopulaKind::Independence) return 0.0;
    return tau_to_param(family, tau_at(row));
}

double clamp_tau(const CopulaFamily& family, double tau) {
    if (family.kind == CopulaKind::Independence) return 0.0;
    const auto [lo, hi] = tau_range(family);
    return std::clamp(tau, lo + kTauMargin, hi - kTauMargin);
}

double pair_loglik(const CopulaFamily& family, const TauModel& tau_model, std::span<const UnitPair> pairs,
                   std::span<const CovariateRow> rows) {
    if (pairs.size() != rows.size() || pairs.empty()) {
        throw DomainError("pair_loglik: pairs and covariate rows must be nonempty and equally long");
    }
    tau_model.validate();
    const PairLikelihood lik(pairs, rows, tau_model.kind, tau_model.spline);
    const double ll = lik.loglik(family, tau_model.coefficients);
    if (!std::isfinite(ll)) throw ConvergenceError("pair_loglik: non-finite log-density");
    return ll;
}

CopulaSpec fit_tau_model(const CopulaFamily& family, std::span<const UnitPair> pairs,
                         std::span<const CovariateRow> rows, const PairFitOptions& opts, double lambda,
                         std::span<const std::size_t> fixed_zero) {
    if (pairs.size() != rows.size() || pairs.empty()) throw DomainError("fit_tau_model: size mismatch");
    family.validate();
    std::vector<double> u(pairs.size()), v(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        u[i] = pairs[i][0];
        v[i] = pairs[i][1];
    }
    const PairLikelihood lik(pairs, rows, opts.design, opts.spline);
    if (family.kind == CopulaKind::Independence) return CopulaSpec::independence(pairs.size());
    return fit_one(lik, family, opts, lambda, kendall_tau(u, v), fixed_zero);
}

PairFitResult fit_pair_detailed(std::span<const UnitPair> pairs, std::span<const CovariateRow> rows,
                                const PairFitOptions& opts) {
    if (pairs.size() != rows.size()) throw DomainError("fit_pair: pairs and rows differ in length");
    PairFitResult out;
    const std::size_t n = pairs.size();
    out.best = CopulaSpec::independence(n);
    out.candidates.push_back({out.best, true, {}});
    if (n < opts.min_obs) return out;

    std::vector<double> u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = pairs[i][0];
        v[i] = pairs[i][1];
    }
    const double tau_emp = kendall_tau(u, v);
    const PairLikelihood lik(pairs, rows, opts.design, opts.spline);
    const std::vector<double> lambdas =
        opts.design == DesignKind::CyclicSpline ? opts.lambda_grid : std::vector<double>{0.0};

    bool any_ok = false;
    bool any_parametric = false;
    // StudentT df is profiled: keep only the best-likelihood df.
    std::map<int, CopulaSpec> best_t;
    for (const CopulaFamily& fam : expand_families(opts, tau_emp)) {
        any_parametric = true;
        for (double lambda : lambdas) {
            CandidateFit cand;
            try {
                cand.spec = fit_one(lik, fam, opts, lambda, tau_emp, {});
                cand.ok = true;
                any_ok = true;
            } catch (const std::exception& e) {
                cand.spec.family = fam;
                cand.error = e.what();
            }
            if (cand.ok && fam.kind == CopulaKind::StudentT) {
                const int key = static_cast<int>(lambda * 1000);
                auto it = best_t.find(key);
                if (it == best_t.end() || cand.spec.loglik > it->second.loglik) best_t[key] = cand.spec;
            } else if (cand.ok && cand.spec.bic < out.best.bic) {
                out.best = cand.spec;
            }
            out.candidates.push_back(std::move(cand));
        }
    }
    for (const auto& [key, spec] : best_t) {
        if (spec.bic < out.best.bic) out.best = spec;
    }
    if (any_parametric && !any_ok) out.best.fit_failed = true;
    return out;
}

CopulaSpec fit_pair(std::span<const UnitPair> pairs, std::span<const CovariateRow> rows,
                    const PairFitOptions& opts) {
    return fit_pair_detailed(pairs, rows, opts).best;
}

std::vector<double> coefficient_lr_pvalues(const CopulaSpec& spec, std::span<const UnitPair> pairs,
                                           std::span<const CovariateRow> rows, const PairFitOptions& opts) {
    std::vector<double> p;
    if (spec.family.kind == CopulaKind::Independence) return p;
    PairFitOptions o = opts;
    o.design = spec.tau_model.kind;
    o.spline = spec.tau_model.spline;
    const double full = pair_loglik(spec.family, spec.tau_model, pairs, rows);
    for (std::size_t j = 0; j < spec.tau_model.coefficients.size(); ++j) {
        const std::array<std::size_t, 1> fixed{j};
        const CopulaSpec restricted = fit_tau_model(spec.family, pairs, rows, o, spec.tau_model.penalty, fixed);
        const double stat = std::max(0.0, 2.0 * (full - restricted.loglik));
        p.push_back(chi2_sf(stat, 1.0));
    }
    return p;
}

}  // namespace gamdvqr
