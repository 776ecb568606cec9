#pragma once
// Synthetic station data for the simulation scenarios. All generators are
// deterministic given the seed.

#include <cstdint>
#include <string>
#include <vector>

#include "gamdvqr/dataset.hpp"
#include "gamdvqr/pair_fit.hpp"

namespace gamdvqr {

inline const std::vector<std::string> kScenarios{"gaussian-oracle", "time-varying-tau", "informative-subset",
                                                 "calibrated-ensemble"};

struct SimulateOptions {
    std::size_t stations = 1;
    std::string start = "2015-01-01";
    std::size_t days = 1826;  // 2015-01-01 .. 2019-12-31
    std::size_t members = 10;
};

std::vector<Date> daily_dates(Date start, std::size_t n);
std::vector<CovariateRow> covariate_rows(const std::vector<Date>& dates);

// The tau model of the time-varying scenario: tanh((0.4 + 0.5 sin - 0.3 cos) / 2).
TauModel t1_reference_tau();
// A cyclic-spline tau model with a summer peak, used for the spline scenario.
TauModel t2_reference_tau();

// One pair per row, drawn by conditional inversion with the row's tau.
std::vector<UnitPair> sample_tau_model(const CopulaFamily& family, const TauModel& tau, const std::vector<CovariateRow>& rows,
                                       std::uint64_t seed);

// Seasonal mean used for the synthetic temperature variables.
double seasonal_mean(const CovariateRow& row);

ForecastDataset simulate(const std::string& scenario, std::uint64_t seed, const SimulateOptions& opts = {});

}  // namespace gamdvqr
