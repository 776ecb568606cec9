#include "gamdvqr/optimize.hpp"

#include <cmath>
#include <limits>

#include "gamdvqr/stats.hpp"

namespace gamdvqr {

namespace {

double safe_eval(const Objective& f, std::span<const double> x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

std::vector<double> central_gradient(const Objective& f, std::span<const double> x, double step) {
    std::vector<double> g(x.size());
    std::vector<double> xp(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(x[i]));
        xp[i] = x[i] + h;
        const double fp = f(xp);
        xp[i] = x[i] - h;
        const double fm = f(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd numerical_hessian(const Objective& f, std::span<const double> x, double step) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd hess(n, n);
    std::vector<double> xp(x.begin(), x.end());
    const double f0 = f(x);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double hi = step * std::max(1.0, std::abs(x[ui]));
        for (Eigen::Index j = i; j < n; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const double hj = step * std::max(1.0, std::abs(x[uj]));
            if (i == j) {
                xp[ui] = x[ui] + hi;
                const double fp = f(xp);
                xp[ui] = x[ui] - hi;
                const double fm = f(xp);
                xp[ui] = x[ui];
                hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
            } else {
                double s = 0.0;
                for (int a : {1, -1}) {
                    for (int b : {1, -1}) {
                        xp[ui] = x[ui] + a * hi;
                        xp[uj] = x[uj] + b * hj;
                        s += a * b * f(xp);
                    }
                }
                xp[ui] = x[ui];
                xp[uj] = x[uj];
                hess(i, j) = hess(j, i) = s / (4.0 * hi * hj);
            }
        }
    }
    return hess;
}

BfgsResult minimize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& opts,
                         const GradientFn& grad) {
    const auto n = static_cast<Eigen::Index>(x0.size());
    BfgsResult res;
    res.x = std::move(x0);
    res.value = safe_eval(f, res.x);
    if (!std::isfinite(res.value)) throw ConvergenceError("objective not finite at the starting point");
    if (n == 0) {
        res.converged = true;
        return res;
    }

    auto gradient = [&](std::span<const double> x) {
        if (grad) {
            std::vector<double> g(x.size());
            grad(x, g);
            return g;
        }
        return central_gradient(f, x, opts.fd_step);
    };
    auto to_eigen = [](const std::vector<double>& v) {
        return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
    };

    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd g = to_eigen(gradient(res.x));
    std::vector<double> trial(res.x.size());

    for (int it = 0; it < opts.max_iter; ++it) {
        res.iterations = it + 1;
        if (g.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
            res.converged = true;
            res.message = "gradient tolerance reached";
            return res;
        }
        Eigen::VectorXd dir = -hinv * g;
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            hinv.setIdentity();
            dir = -g;
            slope = g.dot(dir);
        }

        double step = 1.0;
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (Eigen::Index i = 0; i < n; ++i) {
                trial[static_cast<std::size_t>(i)] = res.x[static_cast<std::size_t>(i)] + step * dir(i);
            }
            f_new = safe_eval(f, trial);
            if (f_new <= res.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No descent possible at working precision.
            res.converged = g.lpNorm<Eigen::Infinity>() < std::max(1e-3, opts.grad_tol);
            res.message = "line search stalled";
            return res;
        }

        const double f_old = res.value;
        Eigen::VectorXd s = step * dir;
        res.x = trial;
        res.value = f_new;
        Eigen::VectorXd g_new = to_eigen(gradient(res.x));
        Eigen::VectorXd y = g_new - g;
        g = std::move(g_new);

        if (opts.rel_tol > 0.0 && std::abs(f_old - f_new) < opts.rel_tol * (std::abs(f_old) + opts.rel_tol)) {
            res.converged = true;
            res.message = "relative tolerance reached";
            return res;
        }

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (it == 0) hinv *= sy / y.dot(y);
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
            hinv = (id - rho * s * y.transpose()) * hinv * (id - rho * y * s.transpose()) +
                   rho * s * s.transpose();
        }
    }
    res.converged = g.lpNorm<Eigen::Infinity>() < opts.grad_tol;
    res.message = "iteration limit reached";
    return res;
}

}  // namespace gamdvqr
