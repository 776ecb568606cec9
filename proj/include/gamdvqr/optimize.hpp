#pragma once
// Quasi-Newton minimization (BFGS with Armijo backtracking) for the small,
// smooth problems of this library: pair-copula tau models, marginal GAMLSS
// fits and EMOS.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gamdvqr {

using Objective = std::function<double(std::span<const double>)>;
using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;

struct BfgsOptions {
    int max_iter = 500;
    double grad_tol = 1e-6;  // infinity norm
    double rel_tol = 0.0;    // stop when |f_k - f_{k+1}| < rel_tol * (|f_k| + rel_tol); 0 disables
    double fd_step = 1e-6;   // central-difference step when no gradient is supplied
};

struct BfgsResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

std::vector<double> central_gradient(const Objective& f, std::span<const double> x, double step);
Eigen::MatrixXd numerical_hessian(const Objective& f, std::span<const double> x, double step);

// Objective values that are not finite are treated as +infinity by the line
// search. Throws ConvergenceError if f(x0) is not finite.
BfgsResult minimize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& opts = {},
                         const GradientFn& grad = {});

}  // namespace gamdvqr
