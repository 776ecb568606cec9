#include "gamdvqr/dvine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gamdvqr/stats.hpp"

namespace gamdvqr {

namespace {

using Column = std::vector<double>;

// Copula parameter per row; consecutive rows with equal tau share one inversion.
class ParamCache {
public:
    explicit ParamCache(const CopulaSpec& spec) : spec_(spec) {}
    double operator()(const CovariateRow& row) {
        if (spec_.family.kind == CopulaKind::Independence) return 0.0;
        const double tau = spec_.tau_at(row);
        if (tau != last_tau_) {
            last_tau_ = tau;
            last_eta_ = tau_to_param(spec_.family, tau);
        }
        return last_eta_;
    }

private:
    const CopulaSpec& spec_;
    double last_tau_ = std::numeric_limits<double>::quiet_NaN();
    double last_eta_ = 0.0;
};

// Forward h(a|b) and backward h(b|a) transforms of one edge over all cases.
void edge_transform(const CopulaSpec& spec, const Column& a, const Column& b, std::span<const CovariateRow> rows,
                    Column& fwd, Column& bwd) {
    const std::size_t n = a.size();
    fwd.resize(n);
    bwd.resize(n);
    if (spec.family.kind == CopulaKind::Independence) {
        fwd = a;
        bwd = b;
        return;
    }
    ParamCache param(spec);
    for (std::size_t i = 0; i < n; ++i) {
        const double eta = param(rows[i]);
        fwd[i] = hfunc(spec.family, eta, CondOn::Second, a[i], b[i]);
        bwd[i] = hfunc(spec.family, eta, CondOn::First, a[i], b[i]);
    }
}

std::vector<UnitPair> make_pairs(const Column& a, const Column& b) {
    std::vector<UnitPair> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = {a[i], b[i]};
    return out;
}

// Pseudo-observations of the current vine: fwd[t][e] = F(e | e+1..e+t),
// bwd[t][e] = F(e+t | e..e+t-1); fwd[0][e] = bwd[0][e] = PIT of position e.
struct VineState {
    std::vector<std::vector<Column>> fwd, bwd;
    std::vector<std::vector<CopulaSpec>> trees;
    std::size_t positions() const { return fwd.empty() ? 0 : fwd[0].size(); }
};

struct Extension {
    std::vector<CopulaSpec> edges;  // edges[t-1] is the new edge of tree t
    std::vector<Column> fwd, bwd;   // index t = 0..k
};

Extension extend(const VineState& s, const Column& u, std::span<const CovariateRow> rows,
                 const DVineOptions& opts) {
    const std::size_t k = s.positions();  // new position index
    Extension ext;
    ext.fwd.resize(k + 1);
    ext.bwd.resize(k + 1);
    ext.fwd[0] = u;
    ext.bwd[0] = u;
    for (std::size_t t = 1; t <= k; ++t) {
        const std::size_t e = k - t;
        const Column& a = s.fwd[t - 1][e];
        const Column& b = ext.bwd[t - 1];
        const auto pairs = make_pairs(a, b);
        CopulaSpec spec = fit_pair(pairs, rows, opts.pair);
        edge_transform(spec, a, b, rows, ext.fwd[t], ext.bwd[t]);
        ext.edges.push_back(std::move(spec));
    }
    return ext;
}

void append(VineState& s, Extension&& ext) {
    const std::size_t k = s.positions();
    if (s.fwd.empty()) {
        s.fwd.resize(1);
        s.bwd.resize(1);
    }
    s.fwd[0].push_back(std::move(ext.fwd[0]));
    s.bwd[0].push_back(std::move(ext.bwd[0]));
    for (std::size_t t = 1; t <= k; ++t) {
        if (s.fwd.size() <= t) {
            s.fwd.emplace_back();
            s.bwd.emplace_back();
            s.trees.emplace_back();
        }
        s.fwd[t].push_back(std::move(ext.fwd[t]));
        s.bwd[t].push_back(std::move(ext.bwd[t]));
        s.trees[t - 1].push_back(std::move(ext.edges[t - 1]));
    }
}

void check_inputs(std::span<const double> v, const std::vector<std::vector<double>>& u_cols,
                  std::span<const CovariateRow> rows) {
    if (rows.size() != v.size()) throw DomainError("dvine: response and covariate rows differ in length");
    for (const auto& c : u_cols) {
        if (c.size() != v.size()) throw DomainError("dvine: predictor column length mismatch");
    }
}

VineState initial_state(std::span<const double> v) {
    VineState s;
    s.fwd.resize(1);
    s.bwd.resize(1);
    s.fwd[0].emplace_back(v.begin(), v.end());
    s.bwd[0].emplace_back(v.begin(), v.end());
    return s;
}

double edge_params(const CopulaSpec& spec) {
    return spec.family.kind == CopulaKind::Independence ? 0.0 : spec.n_params;
}

double unit_clamp(double x) { return std::clamp(x, kUnitClamp, 1.0 - kUnitClamp); }

}  // namespace

DVineOptions dvqr_options() {
    DVineOptions o;
    o.pair.design = DesignKind::Constant;
    o.pair.families = {CopulaKind::Gaussian, CopulaKind::StudentT, CopulaKind::Clayton, CopulaKind::Gumbel,
                       CopulaKind::Frank};
    return o;
}

MarginModel fit_margin_spec(std::span<const double> samples, std::span<const CovariateRow> rows,
                            const MarginSpec& spec) {
    if (spec.kde) return kde_fit(samples);
    try {
        return fit_margin(samples, rows, spec.candidates);
    } catch (const DomainError&) {
        if (spec.fallback.empty()) throw;
        return fit_margin(samples, rows, spec.fallback);
    }
}

DVineFit select_dvine(std::span<const double> v, const std::vector<std::vector<double>>& u_cols,
                      std::span<const CovariateRow> rows, const DVineOptions& opts) {
    check_inputs(v, u_cols, rows);
    const double log_n = std::log(static_cast<double>(v.size()));
    VineState state = initial_state(v);
    DVineFit fit;
    fit.bic_path.push_back(0.0);
    double params0 = 0.0;
    std::vector<bool> used(u_cols.size(), false);

    while (fit.order.size() < std::min(opts.max_predictors, u_cols.size())) {
        double best_bic = fit.bic;
        std::size_t best_j = u_cols.size();
        Extension best_ext;
        double best_ll = 0.0, best_params = 0.0;
        for (std::size_t j = 0; j < u_cols.size(); ++j) {
            if (used[j]) continue;
            try {
                Extension ext = extend(state, u_cols[j], rows, opts);
                const CopulaSpec& top = ext.edges.back();
                const double ll = fit.cll + top.loglik;
                const double params = params0 + edge_params(top);
                const double bic = -2.0 * ll + log_n * params;
                if (bic < best_bic) {
                    best_bic = bic;
                    best_j = j;
                    best_ext = std::move(ext);
                    best_ll = ll;
                    best_params = params;
                }
            } catch (const std::exception& e) {
                fit.diagnostics.push_back("candidate " + std::to_string(j) + " skipped: " + e.what());
            }
        }
        if (best_j == u_cols.size()) break;
        append(state, std::move(best_ext));
        used[best_j] = true;
        fit.order.push_back(best_j);
        fit.cll = best_ll;
        params0 = best_params;
        fit.bic = best_bic;
        fit.bic_path.push_back(best_bic);
    }
    fit.trees = std::move(state.trees);
    return fit;
}

DVineFit fit_dvine_order(std::span<const double> v, const std::vector<std::vector<double>>& u_cols,
                         std::span<const std::size_t> order, std::span<const CovariateRow> rows,
                         const DVineOptions& opts) {
    check_inputs(v, u_cols, rows);
    const double log_n = std::log(static_cast<double>(v.size()));
    VineState state = initial_state(v);
    DVineFit fit;
    fit.bic_path.push_back(0.0);
    double params0 = 0.0;
    for (std::size_t j : order) {
        if (j >= u_cols.size()) throw DomainError("dvine: predictor index out of range");
        Extension ext = extend(state, u_cols[j], rows, opts);
        fit.cll += ext.edges.back().loglik;
        params0 += edge_params(ext.edges.back());
        fit.bic = -2.0 * fit.cll + log_n * params0;
        fit.bic_path.push_back(fit.bic);
        append(state, std::move(ext));
        fit.order.push_back(j);
    }
    fit.trees = std::move(state.trees);
    return fit;
}

double DVineModel::response_edge_params() const {
    double p = 0.0;
    for (const auto& tree : trees) p += edge_params(tree.front());
    return p;
}

namespace {

// Predictor-side pseudo-observations of one case (positions >= 1).
struct CaseTriangle {
    std::vector<std::vector<double>> fwd, bwd;
};

CaseTriangle predictor_triangle(const DVineModel& m, std::span<const double> u_pred, const CovariateRow& row) {
    const std::size_t k = m.depth();
    CaseTriangle c;
    c.fwd.assign(k + 1, std::vector<double>(k + 1, 0.0));
    c.bwd = c.fwd;
    for (std::size_t e = 1; e <= k; ++e) c.fwd[0][e] = c.bwd[0][e] = u_pred[e - 1];
    for (std::size_t t = 1; t < k; ++t) {
        for (std::size_t e = 1; e + t <= k; ++e) {
            const CopulaSpec& spec = m.trees[t - 1][e];
            const double a = c.fwd[t - 1][e], b = c.bwd[t - 1][e + 1];
            if (spec.family.kind == CopulaKind::Independence) {
                c.fwd[t][e] = a;
                c.bwd[t][e] = b;
                continue;
            }
            const double eta = spec.param_at(row);
            c.fwd[t][e] = hfunc(spec.family, eta, CondOn::Second, a, b);
            c.bwd[t][e] = hfunc(spec.family, eta, CondOn::First, a, b);
        }
    }
    return c;
}

void check_depth(const DVineModel& m, std::span<const double> u_pred) {
    if (u_pred.size() != m.depth()) throw DomainError("dvine: expected one PIT value per selected predictor");
    if (m.trees.size() != m.depth()) throw DomainError("dvine: malformed tree array");
}

}  // namespace

double DVineModel::conditional_cdf_unit(std::span<const double> u_pred, const CovariateRow& row, double v) const {
    check_depth(*this, u_pred);
    const CaseTriangle c = predictor_triangle(*this, u_pred, row);
    double w = v;
    for (std::size_t t = 1; t <= depth(); ++t) {
        const CopulaSpec& spec = trees[t - 1][0];
        if (spec.family.kind == CopulaKind::Independence) continue;
        w = hfunc(spec.family, spec.param_at(row), CondOn::Second, w, c.bwd[t - 1][1]);
    }
    return w;
}

double DVineModel::quantile_unit(std::span<const double> u_pred, const CovariateRow& row, double alpha) const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("dvine: alpha outside (0, 1)");
    check_depth(*this, u_pred);
    const CaseTriangle c = predictor_triangle(*this, u_pred, row);
    double w = alpha;
    for (std::size_t t = depth(); t >= 1; --t) {
        const CopulaSpec& spec = trees[t - 1][0];
        if (spec.family.kind != CopulaKind::Independence) {
            w = hfunc_inv(spec.family, spec.param_at(row), CondOn::Second, w, c.bwd[t - 1][1]);
        }
    }
    return w;
}

double DVineModel::cll_unit(std::span<const double> u_pred, const CovariateRow& row, double v) const {
    check_depth(*this, u_pred);
    const CaseTriangle c = predictor_triangle(*this, u_pred, row);
    double w = v, ll = 0.0;
    for (std::size_t t = 1; t <= depth(); ++t) {
        const CopulaSpec& spec = trees[t - 1][0];
        if (spec.family.kind == CopulaKind::Independence) continue;
        const double eta = spec.param_at(row);
        const double b = c.bwd[t - 1][1];
        ll += copula_log_pdf(spec.family, eta, w, b);
        w = hfunc(spec.family, eta, CondOn::Second, w, b);
    }
    return ll;
}

namespace {

std::vector<double> selected_pit(const DVineModel& m, std::span<const double> x, const CovariateRow& row) {
    if (x.size() != m.predictor_names.size()) {
        throw DomainError("dvine: expected " + std::to_string(m.predictor_names.size()) + " predictor values");
    }
    std::vector<double> u(m.depth());
    for (std::size_t i = 0; i < m.depth(); ++i) u[i] = m.predictor_margins[i].cdf(x[m.order[i]], row);
    return u;
}

}  // namespace

double DVineModel::conditional_cdf(std::span<const double> x, const CovariateRow& row, double y) const {
    const auto u = selected_pit(*this, x, row);
    return conditional_cdf_unit(u, row, response_margin.cdf(y, row));
}

double DVineModel::predict_quantile(std::span<const double> x, const CovariateRow& row, double alpha) const {
    const auto u = selected_pit(*this, x, row);
    return response_margin.quantile(unit_clamp(quantile_unit(u, row, alpha)), row);
}

std::vector<double> DVineModel::predict_quantiles(std::span<const double> x, const CovariateRow& row,
                                                  std::span<const double> alphas) const {
    const auto u = selected_pit(*this, x, row);
    std::vector<double> out;
    out.reserve(alphas.size());
    for (double a : alphas) out.push_back(response_margin.quantile(unit_clamp(quantile_unit(u, row, a)), row));
    return out;
}

DVineModel fit_dvqr(std::span<const double> y, const std::vector<std::vector<double>>& x_cols,
                    const std::vector<std::string>& names, std::span<const CovariateRow> rows,
                    const DVqrConfig& cfg) {
    if (names.size() != x_cols.size()) throw DomainError("fit_dvqr: one name per predictor required");
    if (x_cols.empty()) throw DomainError("fit_dvqr: at least one candidate predictor required");
    if (!cfg.predictor_margins.empty() && cfg.predictor_margins.size() != x_cols.size()) {
        throw DomainError("fit_dvqr: one margin spec per predictor required");
    }
    DVineModel model;
    model.design = cfg.vine.pair.design;
    model.predictor_names = names;
    model.n_obs = y.size();
    model.response_margin = fit_margin_spec(y, rows, cfg.response_margin);

    std::vector<double> v(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) v[i] = model.response_margin.cdf(y[i], rows[i]);

    std::vector<MarginModel> margins;
    std::vector<std::vector<double>> u_cols(x_cols.size());
    const MarginSpec default_spec{cfg.response_margin.kde, candidate_set('A'), candidate_set('A')};
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
        const MarginSpec& spec = cfg.predictor_margins.empty() ? default_spec : cfg.predictor_margins[j];
        margins.push_back(fit_margin_spec(x_cols[j], rows, spec));
        u_cols[j].resize(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) u_cols[j][i] = margins[j].cdf(x_cols[j][i], rows[i]);
    }

    DVineFit fit = select_dvine(v, u_cols, rows, cfg.vine);
    model.order = fit.order;
    model.trees = std::move(fit.trees);
    model.cll = fit.cll;
    model.bic = fit.bic;
    model.diagnostics = std::move(fit.diagnostics);
    for (std::size_t j : model.order) model.predictor_margins.push_back(margins[j]);
    return model;
}

double model_cll(const DVineModel& model, std::span<const double> y, const std::vector<std::vector<double>>& x_cols,
                 std::span<const CovariateRow> rows) {
    double total = 0.0;
    std::vector<double> u(model.depth());
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t k = 0; k < model.depth(); ++k) {
            u[k] = model.predictor_margins[k].cdf(x_cols[model.order[k]][i], rows[i]);
        }
        total += model.cll_unit(u, rows[i], model.response_margin.cdf(y[i], rows[i]));
    }
    return total;
}

}  // namespace gamdvqr
