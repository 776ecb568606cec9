#include "gamdvqr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "gamdvqr/stats.hpp"

namespace gamdvqr {

namespace {

double draw_unit(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return std::clamp(u(rng), kUnitClamp, 1.0 - kUnitClamp);
}

std::string station_name(std::size_t s) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "S%03zu", s + 1);
    return buf;
}

ForecastRecord make_record(const std::string& station, Date date, double obs, std::size_t n_vars) {
    ForecastRecord r;
    r.station = station;
    r.date = date;
    r.obs = obs;
    r.mean.assign(n_vars, 0.0);
    r.sd.assign(n_vars, 0.0);
    r.members.resize(n_vars);
    return r;
}

}  // namespace

std::vector<Date> daily_dates(Date start, std::size_t n) {
    std::vector<Date> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = start + std::chrono::days{static_cast<long>(i)};
    return d;
}

std::vector<CovariateRow> covariate_rows(const std::vector<Date>& dates) {
    std::vector<CovariateRow> rows;
    rows.reserve(dates.size());
    for (const auto& d : dates) rows.push_back(CovariateRow::from_doy(day_of_year(d)));
    return rows;
}

TauModel t1_reference_tau() { return {DesignKind::LinearSinCos, {0.4, 0.5, -0.3}, {}, 0.0}; }

TauModel t2_reference_tau() {
    return {DesignKind::CyclicSpline, {0.1, 0.0, 0.3, 1.4, 1.8, 0.8, -0.2, -0.1}, {}, 0.0};
}

std::vector<UnitPair> sample_tau_model(const CopulaFamily& family, const TauModel& tau,
                                       const std::vector<CovariateRow>& rows, std::uint64_t seed) {
    family.validate();
    tau.validate();
    std::mt19937_64 rng(seed);
    std::vector<UnitPair> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        const double w1 = draw_unit(rng), w2 = draw_unit(rng);
        if (family.kind == CopulaKind::Independence) {
            out.push_back({w1, w2});
            continue;
        }
        const double eta = tau_to_param(family, clamp_tau(family, tau.tau(row)));
        out.push_back({w1, hfunc_inv(family, eta, CondOn::First, w2, w1)});
    }
    return out;
}

double seasonal_mean(const CovariateRow& row) { return 9.0 + 1.0 * row.u_sin - 8.0 * row.u_cos; }

ForecastDataset simulate(const std::string& scenario, std::uint64_t seed, const SimulateOptions& opts) {
    if (std::find(kScenarios.begin(), kScenarios.end(), scenario) == kScenarios.end()) {
        throw DomainError("unknown scenario '" + scenario + "'");
    }
    if (opts.days < 1 || opts.stations < 1) throw DomainError("simulate: need at least one day and station");
    const auto dates = daily_dates(parse_date(opts.start), opts.days);
    const auto rows = covariate_rows(dates);

    ForecastDataset ds;
    if (scenario == "informative-subset") {
        ds.variables = {"t2m", "d2m", "pr"};
    } else if (scenario == "gaussian-oracle") {
        ds.variables = {"t2m", "d2m"};
    } else {
        ds.variables = {"t2m"};
    }
    const std::size_t nv = ds.variables.size();

    for (std::size_t s = 0; s < opts.stations; ++s) {
        const std::uint64_t station_seed = seed * 1000003ULL + s;
        std::mt19937_64 rng(station_seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        auto lognormal_sd = [&] { return std::exp(0.2 + 0.3 * gauss(rng)); };
        const std::string name = station_name(s);

        if (scenario == "gaussian-oracle") {
            // Cholesky factor of the correlation matrix of (Y, X1, X2).
            const double r1 = 0.7, r2 = 0.5, r12 = 0.3;
            const double l22 = std::sqrt(1.0 - r1 * r1);
            const double l32 = (r12 - r2 * r1) / l22;
            const double l33 = std::sqrt(1.0 - r2 * r2 - l32 * l32);
            for (std::size_t i = 0; i < dates.size(); ++i) {
                const double z0 = gauss(rng), z1 = gauss(rng), z2 = gauss(rng);
                const double m = seasonal_mean(rows[i]);
                auto r = make_record(name, dates[i], m + 3.0 * z0, nv);
                r.mean[0] = m + 3.0 * (r1 * z0 + l22 * z1);
                r.mean[1] = m - 2.0 + 3.0 * (r2 * z0 + l32 * z1 + l33 * z2);
                r.sd[0] = lognormal_sd();
                r.sd[1] = lognormal_sd();
                ds.records.push_back(std::move(r));
            }
        } else if (scenario == "time-varying-tau" || scenario == "informative-subset") {
            const TauModel tau =
                scenario == "time-varying-tau" ? t1_reference_tau() : TauModel::constant(inverse_link_tau(0.6));
            const auto pairs = sample_tau_model(CopulaFamily::gaussian(), tau, rows, station_seed ^ 0x9e3779b97f4a7c15ULL);
            for (std::size_t i = 0; i < dates.size(); ++i) {
                const double m = seasonal_mean(rows[i]);
                auto r = make_record(name, dates[i], m + 3.0 * norm_quantile(pairs[i][0]), nv);
                r.mean[0] = m + 3.0 * norm_quantile(pairs[i][1]);
                r.sd[0] = lognormal_sd();
                if (nv == 3) {
                    r.mean[1] = m - 2.0 + 3.0 * gauss(rng);
                    r.sd[1] = lognormal_sd();
                    r.mean[2] = 1000.0 + 10.0 * gauss(rng);
                    r.sd[2] = lognormal_sd();
                }
                ds.records.push_back(std::move(r));
            }
        } else {  // calibrated-ensemble
            std::uniform_real_distribution<double> spread(0.5, 3.0);
            for (std::size_t i = 0; i < dates.size(); ++i) {
                const double mu = seasonal_mean(rows[i]) + 2.0 * gauss(rng);
                const double sigma = spread(rng);
                auto r = make_record(name, dates[i], mu + sigma * gauss(rng), nv);
                for (std::size_t k = 0; k < opts.members; ++k) r.members[0].push_back(mu + sigma * gauss(rng));
                const auto [em, es] = ensemble_summary(r.members[0]);
                r.mean[0] = em;
                r.sd[0] = es;
                ds.records.push_back(std::move(r));
            }
        }
    }
    ds.report.rows = ds.records.size();
    ds.report.stations = opts.stations;
    return ds;
}

}  // namespace gamdvqr
