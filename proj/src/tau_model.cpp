#include "gamdvqr/tau_model.hpp"

#include <cmath>

#include "gamdvqr/stats.hpp"

namespace gamdvqr {

std::string design_name(DesignKind kind) {
    switch (kind) {
        case DesignKind::Constant: return "Constant";
        case DesignKind::LinearSinCos: return "LinearSinCos";
        case DesignKind::CyclicSpline: return "CyclicSpline";
    }
    return "?";
}

DesignKind parse_design(const std::string& name) {
    if (name == "Constant" || name == "C") return DesignKind::Constant;
    if (name == "LinearSinCos" || name == "T1") return DesignKind::LinearSinCos;
    if (name == "CyclicSpline" || name == "T2") return DesignKind::CyclicSpline;
    throw DomainError("unknown design kind: " + name);
}

CovariateRow CovariateRow::from_doy(int doy) {
    if (doy < 1 || doy > 366) throw DomainError("day of year outside [1,366]");
    const double a = 2.0 * kPi * doy / 365.25;
    return {doy, std::sin(a), std::cos(a)};
}

namespace {

double cubic_bspline(double t) {
    if (t < 0.0 || t >= 4.0) return 0.0;
    if (t < 1.0) return t * t * t / 6.0;
    if (t < 2.0) return (-3.0 * t * t * t + 12.0 * t * t - 12.0 * t + 4.0) / 6.0;
    if (t < 3.0) return (3.0 * t * t * t - 24.0 * t * t + 60.0 * t - 44.0) / 6.0;
    const double s = 4.0 - t;
    return s * s * s / 6.0;
}

}  // namespace

std::vector<double> cyclic_spline_basis(double doy, const SplineConfig& cfg) {
    if (cfg.n_basis < 4) throw DomainError("cyclic spline needs at least 4 basis functions");
    const int k = cfg.n_basis;
    const double h = cfg.period / k;
    double s = std::fmod((doy - cfg.start) / h, static_cast<double>(k));
    if (s < 0.0) s += k;
    std::vector<double> out(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < k; ++j) {
        double t = s - j;
        if (t < 0.0) t += k;
        out[static_cast<std::size_t>(j)] = cubic_bspline(t);
    }
    return out;
}

Eigen::MatrixXd cyclic_difference_penalty(int n_basis) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_basis, n_basis);
    for (int i = 0; i < n_basis; ++i) {
        d(i, (i + n_basis - 1) % n_basis) += 1.0;
        d(i, i) -= 2.0;
        d(i, (i + 1) % n_basis) += 1.0;
    }
    return d.transpose() * d;
}

double link_tau(double eta_lin) { return std::tanh(eta_lin / 2.0); }

double inverse_link_tau(double tau) {
    if (!(tau > -1.0 && tau < 1.0)) throw DomainError("inverse_link_tau: tau outside (-1,1)");
    return 2.0 * std::atanh(tau);
}

std::size_t design_width(DesignKind kind, const SplineConfig& cfg) {
    switch (kind) {
        case DesignKind::Constant: return 1;
        case DesignKind::LinearSinCos: return 3;
        case DesignKind::CyclicSpline: return static_cast<std::size_t>(cfg.n_basis);
    }
    return 0;
}

void design_row(const CovariateRow& row, DesignKind kind, const SplineConfig& cfg, std::span<double> out) {
    if (row.doy < 1 || row.doy > 366) throw DomainError("day of year outside [1,366]");
    if (out.size() != design_width(kind, cfg)) throw DomainError("design_row: output width mismatch");
    switch (kind) {
        case DesignKind::Constant: out[0] = 1.0; break;
        case DesignKind::LinearSinCos:
            out[0] = 1.0;
            out[1] = row.u_sin;
            out[2] = row.u_cos;
            break;
        case DesignKind::CyclicSpline: {
            const auto b = cyclic_spline_basis(row.doy, cfg);
            std::copy(b.begin(), b.end(), out.begin());
            break;
        }
    }
}

Eigen::MatrixXd build_design(std::span<const CovariateRow> rows, DesignKind kind, const SplineConfig& cfg) {
    if (rows.empty()) throw DomainError("build_design: no rows");
    const auto d = design_width(kind, cfg);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    std::vector<double> buf(d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        design_row(rows[i], kind, cfg, buf);
        for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = buf[j];
    }
    return x;
}

void TauModel::validate() const {
    if (coefficients.size() != width()) {
        throw DomainError("tau model: " + std::to_string(coefficients.size()) + " coefficients for a " +
                          design_name(kind) + " design of width " + std::to_string(width()));
    }
    if (penalty < 0.0) throw DomainError("tau model: negative penalty");
}

double TauModel::linear_predictor(const CovariateRow& row) const {
    switch (kind) {
        case DesignKind::Constant: return coefficients.at(0);
        case DesignKind::LinearSinCos:
            return coefficients.at(0) + coefficients.at(1) * row.u_sin + coefficients.at(2) * row.u_cos;
        case DesignKind::CyclicSpline: {
            if (row.doy < 1 || row.doy > 366) throw DomainError("day of year outside [1,366]");
            const auto b = cyclic_spline_basis(row.doy, spline);
            if (b.size() != coefficients.size()) throw DomainError("tau model: dimension mismatch");
            double s = 0.0;
            for (std::size_t j = 0; j < b.size(); ++j) s += b[j] * coefficients[j];
            return s;
        }
    }
    return 0.0;
}

std::vector<double> predict_tau(const TauModel& model, std::span<const CovariateRow> rows) {
    model.validate();
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(model.tau(r));
    return out;
}

}  // namespace gamdvqr
