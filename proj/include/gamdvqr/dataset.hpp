#pragma once
// Station forecast tables: CSV ingestion, ensemble summaries, derived
// variables and training-window utilities.
//
// Input CSV columns: station, date (YYYY-MM-DD), obs, and per weather
// variable v any of v_mean, v_sd, v_ens_1..v_ens_m. Empty cells and "NA"
// are missing values.

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gamdvqr/tau_model.hpp"

namespace gamdvqr {

using Date = std::chrono::sys_days;

Date parse_date(const std::string& s);  // throws DomainError
std::string format_date(Date d);
int day_of_year(Date d);

// 10 m wind speed from its components (squared-component convention).
double wind_speed(double u, double v);
// Relative humidity approximation from dewpoint and temperature (deg C).
double relative_humidity(double d2m, double t2m);

struct ForecastRecord {
    std::string station;
    Date date{};
    double obs = 0.0;
    bool obs_missing = false;
    std::vector<double> mean;                  // per variable
    std::vector<double> sd;                    // per variable
    std::vector<std::vector<double>> members;  // per variable, possibly empty

    CovariateRow covariates() const { return CovariateRow::from_doy(day_of_year(date)); }
};

struct ParseReport {
    std::size_t rows = 0;
    std::size_t stations = 0;
    std::size_t missing_obs = 0;
    std::size_t missing_values = 0;
    std::vector<std::string> notes;
};

class ForecastDataset {
public:
    std::vector<std::string> variables;
    std::vector<ForecastRecord> records;
    ParseReport report;

    // Index of a weather variable, or -1.
    int variable_index(const std::string& v) const;
    // Predictor value by name: "<v>_mean", "<v>_sd", "sin", "cos" or "doy".
    double value(const ForecastRecord& r, const std::string& name) const;
    bool has_predictor(const std::string& name) const;
    // Record indices per station, dates ascending.
    std::map<std::string, std::vector<std::size_t>> by_station() const;
    std::size_t member_count() const;
};

ForecastDataset ingest_csv(const std::string& path);
ForecastDataset parse_csv(std::istream& in, const std::string& source = "<stream>");
void write_csv(const ForecastDataset& ds, std::ostream& out);

// Adds ws10m (from u10m, v10m) and r2m (from d2m, t2m) when their sources
// exist and they are absent; member-wise when members are available.
void derive_variables(ForecastDataset& ds);

// Ensemble mean and standard deviation (m - 1 denominator).
std::pair<double, double> ensemble_summary(const std::vector<double>& members);

// Refined rolling training window for forecast day t: days t-n..t-1 of the
// current year and t-n..t+n around the same calendar day in each of the k
// previous years. Returns the indices of `dates` that fall in the window.
std::vector<std::size_t> rolling_window(const std::vector<Date>& dates, Date target, int n, int k);

}  // namespace gamdvqr
