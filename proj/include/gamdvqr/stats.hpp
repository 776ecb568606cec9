#pragma once
// Small numeric helpers shared across modules: standard normal and Student-t
// functions, Kendall's tau, empirical moments and root bracketing.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gamdvqr {

// Thrown when an argument lies outside a function's mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Thrown when an iterative numerical procedure fails to converge.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846;

double norm_pdf(double z) noexcept;
double norm_cdf(double z) noexcept;
double norm_quantile(double p);

double t_pdf(double x, double df);
double t_cdf(double x, double df);
double t_quantile(double p, double df);

double mean(std::span<const double> x);
// Sample standard deviation with (n - 1) denominator.
double sample_sd(std::span<const double> x);
// Linear-interpolation quantile (type 7), p in [0, 1].
double empirical_quantile(std::vector<double> x, double p);

// Kendall's tau-b, O(n log n) (Knight's merge-sort algorithm).
double kendall_tau(std::span<const double> x, std::span<const double> y);

// Bisection for a nondecreasing f on [lo, hi] solving f(x) = target.
// Requires f(lo) <= target <= f(hi); stops when the interval is below tol.
double bisect_increasing(const std::function<double(double)>& f, double target, double lo,
                         double hi, double tol, int max_iter = 200);

// Chi-square upper tail probability P(X >= x) for df degrees of freedom.
double chi2_sf(double x, double df);

// 64-bit FNV-1a over a byte string, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace gamdvqr
