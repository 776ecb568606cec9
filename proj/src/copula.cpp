#include "gamdvqr/copula.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "gamdvqr/stats.hpp"

namespace gamdvqr {

namespace {

constexpr double kFrankMaxParam = 35.0;
constexpr double kTinyParam = 1e-10;

double clamp_unit(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError(std::string(what) + ": argument outside [0,1]");
    }
    return std::clamp(x, kUnitClamp, 1.0 - kUnitClamp);
}

double clamp_out(double x) { return std::clamp(x, kUnitClamp, 1.0 - kUnitClamp); }

bool is_integer(double x) { return std::abs(x - std::round(x)) < 1e-12; }

double log_sum_exp(double a, double b) {
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// ---------------------------------------------------------------------------
// Unrotated families. theta is always the parameter of the unrotated copula
// (theta > 0 Clayton, theta >= 1 Gumbel). h0 is dC0(u,v)/dv; all unrotated
// families here are exchangeable so dC0/du(u,v) == h0(v,u).

// Gaussian
double gauss_log_pdf(double rho, double u, double v) {
    return gaussian_log_density_scores(norm_quantile(u), norm_quantile(v), rho);
}
double gauss_h(double rho, double u, double v) {
    const double x = norm_quantile(u), y = norm_quantile(v);
    return norm_cdf((x - rho * y) / std::sqrt(1.0 - rho * rho));
}
double gauss_hinv(double rho, double p, double v) {
    const double y = norm_quantile(v);
    return norm_cdf(norm_quantile(p) * std::sqrt(1.0 - rho * rho) + rho * y);
}

// Student t
double t_log_pdf(double rho, double df, double u, double v) {
    return student_t_log_density_scores(t_quantile(u, df), t_quantile(v, df), rho, df);
}
double t_h(double rho, double df, double u, double v) {
    const double x = t_quantile(u, df), y = t_quantile(v, df);
    const double scale = std::sqrt((df + y * y) * (1.0 - rho * rho) / (df + 1.0));
    return t_cdf((x - rho * y) / scale, df + 1.0);
}
double t_hinv(double rho, double df, double p, double v) {
    const double y = t_quantile(v, df);
    const double scale = std::sqrt((df + y * y) * (1.0 - rho * rho) / (df + 1.0));
    return t_cdf(t_quantile(p, df + 1.0) * scale + rho * y, df);
}

// Clayton; log(u^-theta + v^-theta - 1) evaluated stably.
double clayton_log_a(double theta, double u, double v) {
    const double a = -theta * std::log(u), b = -theta * std::log(v);
    if (a < 30.0 && b < 30.0) return std::log1p(std::expm1(a) + std::expm1(b));
    return log_sum_exp(a, b) + std::log1p(-std::exp(-log_sum_exp(a, b)));
}
double clayton_cdf(double theta, double u, double v) {
    return std::exp(-clayton_log_a(theta, u, v) / theta);
}
double clayton_log_pdf(double theta, double u, double v) {
    return std::log1p(theta) - (1.0 + theta) * (std::log(u) + std::log(v)) -
           (2.0 + 1.0 / theta) * clayton_log_a(theta, u, v);
}
double clayton_h(double theta, double u, double v) {
    return std::exp(-(theta + 1.0) * std::log(v) - (1.0 / theta + 1.0) * clayton_log_a(theta, u, v));
}
double clayton_hinv(double theta, double p, double v) {
    // u^-theta = 1 + v^-theta * (p^(-theta/(1+theta)) - 1)
    const double e = std::expm1(-theta / (1.0 + theta) * std::log(p));
    const double lv = -theta * std::log(v);
    double log_upow;
    if (lv < 30.0) {
        log_upow = std::log1p(std::exp(lv) * e);
    } else {
        log_upow = lv + std::log(e + std::exp(-lv));
    }
    return std::exp(-log_upow / theta);
}

// Gumbel
struct GumbelTerms {
    double lx, ly, log_s, a;
};
GumbelTerms gumbel_terms(double theta, double u, double v) {
    const double lx = std::log(-std::log(u)), ly = std::log(-std::log(v));
    const double log_s = log_sum_exp(theta * lx, theta * ly);
    return {lx, ly, log_s, std::exp(log_s / theta)};
}
double gumbel_cdf(double theta, double u, double v) { return std::exp(-gumbel_terms(theta, u, v).a); }
double gumbel_log_pdf(double theta, double u, double v) {
    const auto t = gumbel_terms(theta, u, v);
    return -t.a + (theta - 1.0) * (t.lx + t.ly) - std::log(u) - std::log(v) +
           (1.0 / theta - 2.0) * t.log_s + std::log(t.a + theta - 1.0);
}
double gumbel_h(double theta, double u, double v) {
    const auto t = gumbel_terms(theta, u, v);
    return std::exp(-t.a + (1.0 / theta - 1.0) * t.log_s + (theta - 1.0) * t.ly - std::log(v));
}

// Frank (theta != 0, may be negative)
double frank_cdf(double theta, double u, double v) {
    return -std::log1p(std::expm1(-theta * u) * std::expm1(-theta * v) / std::expm1(-theta)) / theta;
}
double frank_log_pdf(double theta, double u, double v) {
    const double den = std::expm1(-theta) + std::expm1(-theta * u) * std::expm1(-theta * v);
    return std::log(theta * -std::expm1(-theta)) - theta * (u + v) - 2.0 * std::log(std::abs(den));
}
double frank_h(double theta, double u, double v) {
    const double num = std::exp(-theta * v) * std::expm1(-theta * u);
    const double den = std::expm1(-theta) + std::expm1(-theta * u) * std::expm1(-theta * v);
    return num / den;
}

// Base-family dispatch. theta is the unrotated parameter.
struct Base {
    CopulaKind kind;
    double theta;
    double df;

    bool independent() const {
        return kind == CopulaKind::Independence ||
               (kind == CopulaKind::Clayton && theta < kTinyParam) ||
               (kind == CopulaKind::Gumbel && theta - 1.0 < kTinyParam) ||
               (kind == CopulaKind::Frank && std::abs(theta) < kTinyParam) ||
               (kind == CopulaKind::Gaussian && theta == 0.0);
    }

    double cdf(double u, double v) const {
        if (independent()) return u * v;
        switch (kind) {
            case CopulaKind::Gaussian:
                return bivariate_normal_cdf(norm_quantile(u), norm_quantile(v), theta);
            case CopulaKind::StudentT:
                if (is_integer(df)) {
                    return bivariate_t_cdf(t_quantile(u, df), t_quantile(v, df), theta, df);
                } else {
                    // C(u,v) = int_0^v h(u|s) ds
                    auto f = [&](double s) { return h(u, std::clamp(s, kUnitClamp, 1.0 - kUnitClamp)); };
                    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, v, 15, 1e-13);
                }
            case CopulaKind::Clayton: return clayton_cdf(theta, u, v);
            case CopulaKind::Gumbel: return gumbel_cdf(theta, u, v);
            case CopulaKind::Frank: return frank_cdf(theta, u, v);
            default: return u * v;
        }
    }

    double log_pdf(double u, double v) const {
        if (independent()) return 0.0;
        switch (kind) {
            case CopulaKind::Gaussian: return gauss_log_pdf(theta, u, v);
            case CopulaKind::StudentT: return t_log_pdf(theta, df, u, v);
            case CopulaKind::Clayton: return clayton_log_pdf(theta, u, v);
            case CopulaKind::Gumbel: return gumbel_log_pdf(theta, u, v);
            case CopulaKind::Frank: return frank_log_pdf(theta, u, v);
            default: return 0.0;
        }
    }

    // dC0(u, v)/dv
    double h(double u, double v) const {
        if (independent()) return u;
        switch (kind) {
            case CopulaKind::Gaussian: return gauss_h(theta, u, v);
            case CopulaKind::StudentT: return t_h(theta, df, u, v);
            case CopulaKind::Clayton: return clayton_h(theta, u, v);
            case CopulaKind::Gumbel: return gumbel_h(theta, u, v);
            case CopulaKind::Frank: return frank_h(theta, u, v);
            default: return u;
        }
    }

    // Solves h(x, v) = p for x.
    double hinv(double p, double v) const {
        if (independent()) return p;
        switch (kind) {
            case CopulaKind::Gaussian: return gauss_hinv(theta, p, v);
            case CopulaKind::StudentT: return t_hinv(theta, df, p, v);
            case CopulaKind::Clayton: return clayton_hinv(theta, p, v);
            case CopulaKind::Gumbel:
            case CopulaKind::Frank: {
                auto f = [&](double x) { return h(x, v); };
                if (f(kUnitClamp) >= p) return kUnitClamp;
                if (f(1.0 - kUnitClamp) <= p) return 1.0 - kUnitClamp;
                return bisect_increasing(f, p, kUnitClamp, 1.0 - kUnitClamp, 1e-13, 200);
            }
            default: return p;
        }
    }
};

Base base_of(const CopulaFamily& f, double eta) {
    const double theta = f.negative_rotation() ? -eta : eta;
    return Base{f.kind, theta, f.df};
}

double frank_tau(double theta) {
    const double a = std::abs(theta);
    double t;
    if (a < 1e-3) {
        t = a / 9.0 - a * a * a / 900.0;
    } else {
        t = 1.0 - 4.0 / a * (1.0 - debye1(a));
    }
    return theta < 0 ? -t : t;
}

}  // namespace

// ---------------------------------------------------------------------------

double gaussian_log_density_scores(double x, double y, double rho) {
    const double r2 = 1.0 - rho * rho;
    return -0.5 * std::log(r2) - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2);
}

double student_t_log_density_scores(double x, double y, double rho, double df) {
    const double r2 = 1.0 - rho * rho;
    const double lc = std::lgamma(0.5 * (df + 2.0)) + std::lgamma(0.5 * df) -
                      2.0 * std::lgamma(0.5 * (df + 1.0)) - 0.5 * std::log(r2);
    const double q = (x * x + y * y - 2.0 * rho * x * y) / (df * r2);
    return lc - 0.5 * (df + 2.0) * std::log1p(q) +
           0.5 * (df + 1.0) * (std::log1p(x * x / df) + std::log1p(y * y / df));
}

void CopulaFamily::validate() const {
    switch (kind) {
        case CopulaKind::Independence:
            if (rotation != Rotation::R0) throw DomainError("Independence admits rotation 0 only");
            break;
        case CopulaKind::Gaussian:
        case CopulaKind::Frank:
            if (rotation != Rotation::R0) throw DomainError(kind_name(kind) + " admits rotation 0 only");
            break;
        case CopulaKind::StudentT:
            if (rotation != Rotation::R0) throw DomainError("StudentT admits rotation 0 only");
            if (!(df > 2.0) || !std::isfinite(df)) throw DomainError("StudentT requires df > 2");
            break;
        case CopulaKind::Clayton:
        case CopulaKind::Gumbel:
            break;
    }
}

std::string kind_name(CopulaKind kind) {
    switch (kind) {
        case CopulaKind::Independence: return "Independence";
        case CopulaKind::Gaussian: return "Gaussian";
        case CopulaKind::StudentT: return "StudentT";
        case CopulaKind::Clayton: return "Clayton";
        case CopulaKind::Gumbel: return "Gumbel";
        case CopulaKind::Frank: return "Frank";
    }
    return "?";
}

std::string CopulaFamily::name() const {
    std::string s = kind_name(kind);
    if (kind == CopulaKind::StudentT) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "(%.17g)", df);
        s += buf;
    }
    if (rotation != Rotation::R0) s += std::to_string(static_cast<int>(rotation));
    return s;
}

CopulaFamily parse_family(const std::string& name) {
    for (CopulaKind k : {CopulaKind::Independence, CopulaKind::Gaussian, CopulaKind::StudentT,
                         CopulaKind::Clayton, CopulaKind::Gumbel, CopulaKind::Frank}) {
        const std::string base = kind_name(k);
        if (name.rfind(base, 0) != 0) continue;
        std::string rest = name.substr(base.size());
        CopulaFamily f{k, Rotation::R0, 0.0};
        if (k == CopulaKind::StudentT) {
            const auto close = rest.find(')');
            if (rest.empty() || rest[0] != '(' || close == std::string::npos) {
                throw DomainError("malformed StudentT family name: " + name);
            }
            f.df = std::stod(rest.substr(1, close - 1));
            rest = rest.substr(close + 1);
        }
        if (!rest.empty()) {
            const int deg = std::stoi(rest);
            if (deg != 0 && deg != 90 && deg != 180 && deg != 270) {
                throw DomainError("bad rotation in family name: " + name);
            }
            f.rotation = static_cast<Rotation>(deg);
        }
        f.validate();
        return f;
    }
    throw DomainError("unknown copula family: " + name);
}

std::pair<double, double> tau_range(const CopulaFamily& f) {
    switch (f.kind) {
        case CopulaKind::Independence: return {0.0, 0.0};
        case CopulaKind::Gaussian:
        case CopulaKind::StudentT: return {-1.0, 1.0};
        case CopulaKind::Clayton:
        case CopulaKind::Gumbel:
            return f.negative_rotation() ? std::pair{-1.0, 0.0} : std::pair{0.0, 1.0};
        case CopulaKind::Frank: {
            const double t = frank_tau(kFrankMaxParam);
            return {-t, t};
        }
    }
    return {0.0, 0.0};
}

void check_param(const CopulaFamily& f, double eta) {
    if (!std::isfinite(eta)) throw DomainError("copula parameter not finite");
    switch (f.kind) {
        case CopulaKind::Independence:
            if (eta != 0.0) throw DomainError("Independence takes no parameter");
            return;
        case CopulaKind::Gaussian:
        case CopulaKind::StudentT:
            if (!(eta > -1.0 && eta < 1.0)) throw DomainError("correlation parameter outside (-1,1)");
            return;
        case CopulaKind::Clayton:
            if (f.negative_rotation() ? eta > 0.0 : eta < 0.0) {
                throw DomainError("Clayton parameter has the wrong sign for its rotation");
            }
            return;
        case CopulaKind::Gumbel:
            if (f.negative_rotation() ? eta > -1.0 : eta < 1.0) {
                throw DomainError("Gumbel parameter outside its admissible range");
            }
            return;
        case CopulaKind::Frank:
            if (std::abs(eta) > kFrankMaxParam) throw DomainError("Frank parameter outside [-35,35]");
            return;
    }
}

double tau_to_param(const CopulaFamily& f, double tau) {
    f.validate();
    if (!std::isfinite(tau) || tau <= -1.0 || tau >= 1.0) throw DomainError("tau outside (-1,1)");
    switch (f.kind) {
        case CopulaKind::Independence:
            if (tau != 0.0) throw DomainError("Independence copula requires tau = 0");
            return 0.0;
        case CopulaKind::Gaussian:
        case CopulaKind::StudentT: return std::sin(kPi / 2.0 * tau);
        case CopulaKind::Gumbel:
            if (f.negative_rotation()) {
                if (tau > 0.0) throw DomainError("rotated Gumbel requires tau <= 0");
                return -1.0 / (1.0 + tau);
            }
            if (tau < 0.0) throw DomainError("Gumbel requires tau >= 0");
            return 1.0 / (1.0 - tau);
        case CopulaKind::Clayton:
            if (f.negative_rotation()) {
                if (tau > 0.0) throw DomainError("rotated Clayton requires tau <= 0");
                return 2.0 * tau / (1.0 + tau);
            }
            if (tau < 0.0) throw DomainError("Clayton requires tau >= 0");
            return 2.0 * tau / (1.0 - tau);
        case CopulaKind::Frank: {
            const double tmax = frank_tau(kFrankMaxParam);
            if (std::abs(tau) > tmax) throw DomainError("tau outside the Frank range");
            if (tau == 0.0) return 0.0;
            const double a = std::abs(tau);
            std::uintmax_t iters = 200;
            const auto bracket = boost::math::tools::toms748_solve(
                [a](double th) { return th == 0.0 ? -a : frank_tau(th) - a; }, 0.0, kFrankMaxParam, -a,
                frank_tau(kFrankMaxParam) - a, boost::math::tools::eps_tolerance<double>(50), iters);
            const double eta = 0.5 * (bracket.first + bracket.second);
            return tau < 0 ? -eta : eta;
        }
    }
    return 0.0;
}

double param_to_tau(const CopulaFamily& f, double eta) {
    f.validate();
    check_param(f, eta);
    switch (f.kind) {
        case CopulaKind::Independence: return 0.0;
        case CopulaKind::Gaussian:
        case CopulaKind::StudentT: return 2.0 / kPi * std::asin(eta);
        case CopulaKind::Gumbel: return f.negative_rotation() ? -1.0 - 1.0 / eta : 1.0 - 1.0 / eta;
        case CopulaKind::Clayton: return f.negative_rotation() ? eta / (2.0 - eta) : eta / (eta + 2.0);
        case CopulaKind::Frank: return frank_tau(eta);
    }
    return 0.0;
}

double copula_cdf(const CopulaFamily& f, double eta, double u, double v) {
    u = clamp_unit(u, "copula_cdf");
    v = clamp_unit(v, "copula_cdf");
    const Base b = base_of(f, eta);
    double c;
    switch (f.rotation) {
        case Rotation::R0: c = b.cdf(u, v); break;
        case Rotation::R90: c = v - b.cdf(1.0 - u, v); break;
        case Rotation::R180: c = u + v - 1.0 + b.cdf(1.0 - u, 1.0 - v); break;
        case Rotation::R270: c = u - b.cdf(u, 1.0 - v); break;
        default: c = u * v;
    }
    return std::clamp(c, std::max(0.0, u + v - 1.0), std::min(u, v));
}

double copula_log_pdf(const CopulaFamily& f, double eta, double u, double v) {
    u = clamp_unit(u, "copula_pdf");
    v = clamp_unit(v, "copula_pdf");
    const Base b = base_of(f, eta);
    switch (f.rotation) {
        case Rotation::R0: return b.log_pdf(u, v);
        case Rotation::R90: return b.log_pdf(1.0 - u, v);
        case Rotation::R180: return b.log_pdf(1.0 - u, 1.0 - v);
        case Rotation::R270: return b.log_pdf(u, 1.0 - v);
    }
    return 0.0;
}

double copula_pdf(const CopulaFamily& f, double eta, double u, double v) {
    return std::exp(copula_log_pdf(f, eta, u, v));
}

double hfunc(const CopulaFamily& f, double eta, CondOn cond_on, double u, double v) {
    u = clamp_unit(u, "hfunc");
    v = clamp_unit(v, "hfunc");
    const Base b = base_of(f, eta);
    double h;
    if (cond_on == CondOn::Second) {
        switch (f.rotation) {
            case Rotation::R0: h = b.h(u, v); break;
            case Rotation::R90: h = 1.0 - b.h(1.0 - u, v); break;
            case Rotation::R180: h = 1.0 - b.h(1.0 - u, 1.0 - v); break;
            case Rotation::R270: h = b.h(u, 1.0 - v); break;
            default: h = u;
        }
    } else {
        switch (f.rotation) {
            case Rotation::R0: h = b.h(v, u); break;
            case Rotation::R90: h = b.h(v, 1.0 - u); break;
            case Rotation::R180: h = 1.0 - b.h(1.0 - v, 1.0 - u); break;
            case Rotation::R270: h = 1.0 - b.h(1.0 - v, u); break;
            default: h = v;
        }
    }
    return clamp_out(h);
}

double hfunc_inv(const CopulaFamily& f, double eta, CondOn cond_on, double p, double w) {
    p = clamp_unit(p, "hfunc_inv");
    w = clamp_unit(w, "hfunc_inv");
    const Base b = base_of(f, eta);
    double x;
    if (cond_on == CondOn::Second) {
        switch (f.rotation) {
            case Rotation::R0: x = b.hinv(p, w); break;
            case Rotation::R90: x = 1.0 - b.hinv(1.0 - p, w); break;
            case Rotation::R180: x = 1.0 - b.hinv(1.0 - p, 1.0 - w); break;
            case Rotation::R270: x = b.hinv(p, 1.0 - w); break;
            default: x = p;
        }
    } else {
        switch (f.rotation) {
            case Rotation::R0: x = b.hinv(p, w); break;
            case Rotation::R90: x = b.hinv(p, 1.0 - w); break;
            case Rotation::R180: x = 1.0 - b.hinv(1.0 - p, 1.0 - w); break;
            case Rotation::R270: x = 1.0 - b.hinv(1.0 - p, w); break;
            default: x = p;
        }
    }
    return clamp_out(x);
}

std::vector<std::array<double, 2>> copula_sample(const CopulaFamily& f, double eta, std::size_t n,
                                                 std::uint64_t seed) {
    if (n < 1) throw DomainError("copula_sample requires n >= 1");
    f.validate();
    check_param(f, eta);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw = [&] {
        double w;
        do {
            w = unif(rng);
        } while (w <= 0.0);
        return w;
    };
    std::vector<std::array<double, 2>> out(n);
    for (auto& pair : out) {
        const double w1 = draw(), w2 = draw();
        pair = {w1, hfunc_inv(f, eta, CondOn::First, w2, w1)};
    }
    return out;
}

double debye1(double x) {
    if (x == 0.0) return 1.0;
    const double a = std::abs(x);
    double integral = 0.0;
    if (a < 2.0) {
        // The integrand is analytic within 2*pi of the real axis, so a fixed rule is exact to rounding.
        auto integrand = [](double t) { return t < 1e-12 ? 1.0 - 0.5 * t : t / std::expm1(t); };
        integral = boost::math::quadrature::gauss<double, 20>::integrate(integrand, 0.0, a);
    } else {
        // pi^2/6 minus the tail, sum_k e^{-ka} (a/k + 1/k^2).
        double tail = 0.0;
        for (int k = 1; k < 200; ++k) {
            const double term = std::exp(-k * a) * (a / k + 1.0 / (static_cast<double>(k) * k));
            tail += term;
            if (term < 1e-17 * tail) break;
        }
        integral = kPi * kPi / 6.0 - tail;
    }
    const double d = integral / a;
    // D1(-x) = D1(x) + x/2
    return x > 0 ? d : d + a / 2.0;
}

// Genz's BVND (Drezner-Wesolowsky with Gauss-Legendre refinement); returns
// P(X > dh, Y > dk).
static double bvnu(double dh, double dk, double r) {
    using boost::math::quadrature::gauss;
    const double tp = 2.0 * kPi;
    // Positive half of Gauss-Legendre rules of order 6, 12, 20.
    const auto& x6 = gauss<double, 6>::abscissa();
    const auto& w6 = gauss<double, 6>::weights();
    const auto& x12 = gauss<double, 12>::abscissa();
    const auto& w12 = gauss<double, 12>::weights();
    const auto& x20 = gauss<double, 20>::abscissa();
    const auto& w20 = gauss<double, 20>::weights();
    const double* xs;
    const double* ws;
    std::size_t lg;
    if (std::abs(r) < 0.3) {
        xs = x6.data(); ws = w6.data(); lg = x6.size();
    } else if (std::abs(r) < 0.75) {
        xs = x12.data(); ws = w12.data(); lg = x12.size();
    } else {
        xs = x20.data(); ws = w20.data(); lg = x20.size();
    }

    double h = dh, k = dk, hk = h * k, bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r);
        for (std::size_t i = 0; i < lg; ++i) {
            for (double sgn : {-1.0, 1.0}) {
                const double sn = std::sin(asr * (sgn * xs[i] + 1.0) / 2.0);
                bvn += ws[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            }
        }
        bvn = bvn * asr / (2.0 * tp) + norm_cdf(-h) * norm_cdf(-k);
        return bvn;
    }
    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (std::abs(r) < 1.0) {
        const double as = (1.0 - r) * (1.0 + r);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        bvn = a * std::exp(-(bs / as + hk) / 2.0) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        if (hk > -160.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-hk / 2.0) * std::sqrt(tp) * norm_cdf(-b / a) * b *
                   (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (std::size_t i = 0; i < lg; ++i) {
            for (double sgn : {-1.0, 1.0}) {
                double xsq = a * (sgn * xs[i] + 1.0);
                xsq *= xsq;
                const double rs = std::sqrt(1.0 - xsq);
                bvn += a * ws[i] *
                       (std::exp(-bs / (2.0 * xsq) - hk / (1.0 + rs)) / rs -
                        std::exp(-(bs / xsq + hk) / 2.0) * (1.0 + c * xsq * (1.0 + d * xsq)));
            }
        }
        bvn = -bvn / tp;
    }
    if (r > 0.0) bvn += norm_cdf(-std::max(h, k));
    if (r < 0.0) bvn = -bvn + std::max(0.0, norm_cdf(-h) - norm_cdf(-k));
    return bvn;
}

double bivariate_normal_cdf(double x, double y, double rho) {
    if (std::isinf(x) || std::isinf(y)) {
        if (x == -std::numeric_limits<double>::infinity() || y == -std::numeric_limits<double>::infinity()) return 0.0;
        if (std::isinf(x)) return norm_cdf(y);
        return norm_cdf(x);
    }
    return std::clamp(bvnu(-x, -y, rho), 0.0, 1.0);
}

// Genz's BVTL (Dunnett & Sobel recursion), integer degrees of freedom.
double bivariate_t_cdf(double dh, double dk, double r, double df) {
    if (!is_integer(df) || df < 1.0) throw DomainError("bivariate_t_cdf requires integer df >= 1");
    const int nu = static_cast<int>(std::lround(df));
    constexpr double eps = 1e-15;
    const double tpi = 2.0 * kPi;
    if (1.0 - r <= eps) return t_cdf(std::min(dh, dk), df);
    if (r + 1.0 <= eps) return dh > -dk ? t_cdf(dh, df) - t_cdf(-dk, df) : 0.0;

    const double snu = std::sqrt(static_cast<double>(nu));
    const double ors = 1.0 - r * r;
    const double hrk = dh - r * dk;
    const double krh = dk - r * dh;
    double xnhk = 0.0, xnkh = 0.0;
    if (std::abs(hrk) + ors > 0.0) {
        xnhk = hrk * hrk / (hrk * hrk + ors * (nu + dk * dk));
        xnkh = krh * krh / (krh * krh + ors * (nu + dh * dh));
    }
    const double hs = hrk < 0.0 ? -1.0 : 1.0;
    const double ks = krh < 0.0 ? -1.0 : 1.0;
    double bvt;
    if (nu % 2 == 0) {
        bvt = std::atan2(std::sqrt(ors), -r) / tpi;
        double gmph = dh / std::sqrt(16.0 * (nu + dh * dh));
        double gmpk = dk / std::sqrt(16.0 * (nu + dk * dk));
        double btnckh = 2.0 * std::atan2(std::sqrt(xnkh), std::sqrt(1.0 - xnkh)) / kPi;
        double btpdkh = 2.0 * std::sqrt(xnkh * (1.0 - xnkh)) / kPi;
        double btnchk = 2.0 * std::atan2(std::sqrt(xnhk), std::sqrt(1.0 - xnhk)) / kPi;
        double btpdhk = 2.0 * std::sqrt(xnhk * (1.0 - xnhk)) / kPi;
        for (int j = 1; j <= nu / 2; ++j) {
            bvt += gmph * (1.0 + ks * btnckh);
            bvt += gmpk * (1.0 + hs * btnchk);
            btnckh += btpdkh;
            btpdkh = 2.0 * j * btpdkh * (1.0 - xnkh) / (2.0 * j + 1.0);
            btnchk += btpdhk;
            btpdhk = 2.0 * j * btpdhk * (1.0 - xnhk) / (2.0 * j + 1.0);
            gmph = gmph * (2.0 * j - 1.0) / (2.0 * j * (1.0 + dh * dh / nu));
            gmpk = gmpk * (2.0 * j - 1.0) / (2.0 * j * (1.0 + dk * dk / nu));
        }
    } else {
        const double qhrk = std::sqrt(dh * dh + dk * dk - 2.0 * r * dh * dk + nu * ors);
        const double hkrn = dh * dk + r * nu;
        const double hkn = dh * dk - nu;
        const double hpk = dh + dk;
        bvt = std::atan2(-snu * (hkn * qhrk + hpk * hkrn), hkn * hkrn - nu * hpk * qhrk) / tpi;
        if (bvt < -eps) bvt += 1.0;
        double gmph = dh / (tpi * snu * (1.0 + dh * dh / nu));
        double gmpk = dk / (tpi * snu * (1.0 + dk * dk / nu));
        double btnckh = std::sqrt(xnkh);
        double btpdkh = btnckh;
        double btnchk = std::sqrt(xnhk);
        double btpdhk = btnchk;
        for (int j = 1; j <= (nu - 1) / 2; ++j) {
            bvt += gmph * (1.0 + ks * btnckh);
            bvt += gmpk * (1.0 + hs * btnchk);
            btpdkh = (2.0 * j - 1.0) * btpdkh * (1.0 - xnkh) / (2.0 * j);
            btnckh += btpdkh;
            btpdhk = (2.0 * j - 1.0) * btpdhk * (1.0 - xnhk) / (2.0 * j);
            btnchk += btpdhk;
            gmph = 2.0 * j * gmph / ((2.0 * j + 1.0) * (1.0 + dh * dh / nu));
            gmpk = 2.0 * j * gmpk / ((2.0 * j + 1.0) * (1.0 + dk * dk / nu));
        }
    }
    return std::clamp(bvt, 0.0, 1.0);
}

}  // namespace gamdvqr
