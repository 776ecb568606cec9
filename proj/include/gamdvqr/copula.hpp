#pragma once
// Parametric bivariate copula families.
//
// Every family is parameterized by a single dependence parameter eta that is
// in bijection with Kendall's tau. Rotations follow the counterclockwise
// convention: for an unrotated copula C0,
//
//   90 deg : C(u,v) = v - C0(1-u, v)
//   180 deg: C(u,v) = u + v - 1 + C0(1-u, 1-v)
//   270 deg: C(u,v) = u - C0(u, 1-v)
//
// 90/270 deg rotations carry a negative eta (the unrotated parameter is -eta).
// All (u, v) arguments are clamped to [kUnitClamp, 1 - kUnitClamp] before
// evaluation; values outside [0, 1] raise DomainError.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gamdvqr {

inline constexpr double kUnitClamp = 1e-10;

enum class CopulaKind : std::uint8_t { Independence, Gaussian, StudentT, Clayton, Gumbel, Frank };
enum class Rotation : std::uint16_t { R0 = 0, R90 = 90, R180 = 180, R270 = 270 };

// Which argument an h-function conditions on. Second: h(u|v) = dC/dv.
// First: h(v|u) = dC/du.
enum class CondOn : std::uint8_t { First = 1, Second = 2 };

struct CopulaFamily {
    CopulaKind kind = CopulaKind::Independence;
    Rotation rotation = Rotation::R0;
    double df = 0.0;  // StudentT only

    static CopulaFamily independence() { return {}; }
    static CopulaFamily gaussian() { return {CopulaKind::Gaussian, Rotation::R0, 0.0}; }
    static CopulaFamily student_t(double df) { return {CopulaKind::StudentT, Rotation::R0, df}; }
    static CopulaFamily clayton(Rotation r = Rotation::R0) { return {CopulaKind::Clayton, r, 0.0}; }
    static CopulaFamily gumbel(Rotation r = Rotation::R0) { return {CopulaKind::Gumbel, r, 0.0}; }
    static CopulaFamily frank() { return {CopulaKind::Frank, Rotation::R0, 0.0}; }

    // Throws DomainError when the combination violates the family invariants.
    void validate() const;
    // Negative-dependence rotations (90/270 deg).
    bool negative_rotation() const {
        return rotation == Rotation::R90 || rotation == Rotation::R270;
    }
    std::string name() const;

    friend bool operator==(const CopulaFamily&, const CopulaFamily&) = default;
};

// Parses the output of CopulaFamily::name(), e.g. "Gumbel90", "StudentT(5)".
CopulaFamily parse_family(const std::string& name);
std::string kind_name(CopulaKind kind);

struct CopulaParam {
    double eta = 0.0;
    double tau = 0.0;
};

// Open interval of attainable Kendall's tau (Frank is capped by |eta| <= 35).
std::pair<double, double> tau_range(const CopulaFamily& family);

double tau_to_param(const CopulaFamily& family, double tau);
double param_to_tau(const CopulaFamily& family, double eta);
// Throws DomainError if eta is not admissible for the family.
void check_param(const CopulaFamily& family, double eta);

double copula_cdf(const CopulaFamily& family, double eta, double u, double v);
double copula_pdf(const CopulaFamily& family, double eta, double u, double v);
double copula_log_pdf(const CopulaFamily& family, double eta, double u, double v);

// cond_on == Second: P(U <= u | V = v); cond_on == First: P(V <= v | U = u).
double hfunc(const CopulaFamily& family, double eta, CondOn cond_on, double u, double v);

// Solves for the free argument x given the conditioning value w:
//   cond_on == Second: hfunc(family, eta, Second, x, w) = p
//   cond_on == First : hfunc(family, eta, First,  w, x) = p
double hfunc_inv(const CopulaFamily& family, double eta, CondOn cond_on, double p, double w);

// Conditional-inversion sampling: u = w1, v = hfunc_inv(First, w2, w1).
std::vector<std::array<double, 2>> copula_sample(const CopulaFamily& family, double eta,
                                                 std::size_t n, std::uint64_t seed);

// Debye function of order one, D1(x) = x^-1 * int_0^x t / (e^t - 1) dt.
double debye1(double x);

// Log densities on the score scale: x, y are the normal (resp. Student-t)
// quantiles of u, v. Used by likelihood loops that transform data once.
double gaussian_log_density_scores(double x, double y, double rho);
double student_t_log_density_scores(double x, double y, double rho, double df);

// Lower-orthant probabilities of the standard bivariate normal and t.
double bivariate_normal_cdf(double x, double y, double rho);
double bivariate_t_cdf(double x, double y, double rho, double df);

}  // namespace gamdvqr
