#pragma once
// Train / predict / verify orchestration over stations.
//
// Files written under an output directory:
//   models/<station>__<method>.json
//   predictions_<method>.csv   station,date,alpha,quantile
//   params_<method>.csv        station,date,mu,sigma (Gaussian methods)
//   scores.csv, dm.csv, pit_histogram.csv, rank_histogram.csv, summary.json

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gamdvqr/config.hpp"
#include "gamdvqr/dataset.hpp"

namespace gamdvqr {

struct StationSplit {
    std::vector<std::size_t> train;  // record indices, dates ascending
    std::vector<std::size_t> test;
};

// Training cases: in [train_start, train_end] (or before test_start when the
// training range is open). Test cases: in [test_start, test_end].
StationSplit split_station(const ForecastDataset& ds, const std::vector<std::size_t>& idx, const RunConfig& cfg);

struct JobStatus {
    std::string station;
    std::string method;
    bool ok = false;
    std::string message;
};

std::vector<JobStatus> run_train(const RunConfig& cfg, const ForecastDataset& ds, const std::string& out_dir);
std::vector<JobStatus> run_predict(const RunConfig& cfg, const ForecastDataset& ds, const std::string& model_dir,
                                   const std::string& out_dir);

struct MethodScores {
    std::string method;
    std::string station;  // empty for the all-station aggregate
    std::size_t n = 0;
    double crps = 0.0, mae = 0.0, rmse = 0.0, coverage = 0.0, width = 0.0;
    double crpss = 0.0;  // vs the reference method, NaN if unavailable
};

struct DmRow {
    std::string station, method, reference;
    double statistic = 0.0, p_value = 1.0;
    bool reject = false;
};

struct ScoreReport {
    std::vector<MethodScores> per_station;
    std::vector<MethodScores> overall;
    std::vector<DmRow> dm;
    std::map<std::string, std::vector<std::size_t>> pit_histogram;   // method -> counts
    std::map<std::string, std::vector<std::size_t>> rank_histogram;  // raw ensemble
    std::map<std::string, std::vector<double>> crps_series;          // method -> per-case CRPS
};

ScoreReport run_verify(const RunConfig& cfg, const ForecastDataset& ds, const std::string& pred_dir,
                       const std::string& out_dir);

// Writes the normalized contour density of one edge of a saved D-vine model.
void run_contour(const std::string& model_path, std::size_t tree, std::size_t edge, int doy, std::size_t grid_n,
                 const std::string& out_csv);

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace gamdvqr
