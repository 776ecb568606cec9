#pragma once
// Run configuration: a flat key=value file ('#' starts a comment) with
// command-line overrides.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gamdvqr/dataset.hpp"
#include "gamdvqr/dvine.hpp"
#include "gamdvqr/emos.hpp"

namespace gamdvqr {

inline const std::vector<std::string> kAllMethods{"EMOS", "EMOS-GB", "DVQR", "GAM-DVQR-C", "GAM-DVQR-T1",
                                                  "GAM-DVQR-T2"};

struct RunConfig {
    std::string response = "t2m";
    std::string variable_set = "reduced";  // reduced | extended
    std::vector<std::string> predictors;   // overrides variable_set when nonempty
    std::vector<std::string> methods{"EMOS", "GAM-DVQR-C", "GAM-DVQR-T1"};
    std::vector<std::string> stations;     // empty: all

    std::optional<Date> train_start, train_end, test_start, test_end;

    std::vector<CopulaKind> families{CopulaKind::Gaussian, CopulaKind::StudentT, CopulaKind::Clayton,
                                     CopulaKind::Gumbel};
    std::size_t max_predictors = 8;
    int spline_basis = 8;
    std::vector<double> lambda_grid{0.0, 0.1, 1.0, 10.0, 100.0};
    std::vector<double> df_grid{3.0, 5.0, 10.0, 20.0};
    std::size_t min_train = 100;

    int window_n = 25;
    int window_k = 4;

    EmosLoss emos_loss = EmosLoss::CRPS;
    int emos_max_iter = 5000;
    double emos_rel_tol = 1e-8;
    EmosLoss emosgb_loss = EmosLoss::LogS;
    int emosgb_max_iter = 500;
    double emosgb_step = 0.05;
    InfoCriterion emosgb_stop = InfoCriterion::AIC;

    std::size_t crps_k = 100;
    std::size_t interval_m = 50;
    std::vector<double> alphas;  // empty: CRPS levels plus median and interval bounds
    std::string reference_method = "EMOS";
    std::size_t dm_hac_lag = 0;
    double bh_alpha = 0.05;

    std::uint64_t seed = 1;
    unsigned workers = 1;

    // Raw key=value pairs as read, used for the configuration hash.
    std::map<std::string, std::string> raw;

    void set(const std::string& key, const std::string& value);
    void validate() const;
    // Predictor names after resolving the variable set.
    std::vector<std::string> predictor_names() const;
    std::vector<double> prediction_levels() const;
    // Hash over the canonical key=value text.
    std::string hash() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(std::istream& in);

// DVine options of a GAM-DVQR or DVQR method name.
DVineOptions vine_options(const RunConfig& cfg, const std::string& method);
// Margin candidates for a predictor or the response, following the
// distribution-set assignment per weather variable.
MarginSpec margin_spec_for(const std::string& name, bool kde);

std::vector<std::string> split_list(const std::string& s);

}  // namespace gamdvqr
