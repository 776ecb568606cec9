#include "gamdvqr/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "gamdvqr/stats.hpp"
#include "gamdvqr/verification.hpp"

namespace gamdvqr {

namespace {

const std::vector<std::string> kExtendedVariables{"t2m", "d2m", "pr", "sr", "u10m",
                                                  "v10m", "r2m", "tcc", "ws10m", "wg10m"};

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw DomainError("config: " + key + " expects a number, got '" + v + "'");
}

long to_int(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    if (x != static_cast<double>(static_cast<long>(x))) throw DomainError("config: " + key + " expects an integer");
    return static_cast<long>(x);
}

std::size_t to_count(const std::string& key, const std::string& v) {
    const long x = to_int(key, v);
    if (x < 0) throw DomainError("config: " + key + " must be nonnegative");
    return static_cast<std::size_t>(x);
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
    return out;
}

}  // namespace

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, ',')) {
        cur = strip(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const std::string v = strip(value);
    if (key == "response") {
        response = v;
    } else if (key == "variables") {
        if (v != "reduced" && v != "extended") throw DomainError("config: variables must be reduced or extended");
        variable_set = v;
    } else if (key == "predictors") {
        predictors = split_list(v);
    } else if (key == "methods") {
        methods = split_list(v);
    } else if (key == "stations") {
        stations = split_list(v);
    } else if (key == "train_start") {
        train_start = parse_date(v);
    } else if (key == "train_end") {
        train_end = parse_date(v);
    } else if (key == "test_start") {
        test_start = parse_date(v);
    } else if (key == "test_end") {
        test_end = parse_date(v);
    } else if (key == "families") {
        families.clear();
        for (const auto& f : split_list(v)) families.push_back(parse_family(f).kind);
    } else if (key == "max_predictors") {
        max_predictors = to_count(key, v);
    } else if (key == "spline_basis") {
        spline_basis = static_cast<int>(to_int(key, v));
    } else if (key == "lambda_grid") {
        lambda_grid = to_doubles(key, v);
    } else if (key == "df_grid") {
        df_grid = to_doubles(key, v);
    } else if (key == "min_train") {
        min_train = to_count(key, v);
    } else if (key == "window_n") {
        window_n = static_cast<int>(to_int(key, v));
    } else if (key == "window_k") {
        window_k = static_cast<int>(to_int(key, v));
    } else if (key == "emos_loss") {
        emos_loss = parse_loss(v);
    } else if (key == "emos_max_iter") {
        emos_max_iter = static_cast<int>(to_int(key, v));
    } else if (key == "emos_rel_tol") {
        emos_rel_tol = to_double(key, v);
    } else if (key == "emosgb_loss") {
        emosgb_loss = parse_loss(v);
    } else if (key == "emosgb_max_iter") {
        emosgb_max_iter = static_cast<int>(to_int(key, v));
    } else if (key == "emosgb_step") {
        emosgb_step = to_double(key, v);
    } else if (key == "emosgb_stop") {
        if (v == "AIC") emosgb_stop = InfoCriterion::AIC;
        else if (v == "BIC") emosgb_stop = InfoCriterion::BIC;
        else throw DomainError("config: emosgb_stop must be AIC or BIC");
    } else if (key == "crps_k") {
        crps_k = to_count(key, v);
    } else if (key == "interval_m") {
        interval_m = to_count(key, v);
    } else if (key == "alphas") {
        alphas = to_doubles(key, v);
    } else if (key == "reference_method") {
        reference_method = v;
    } else if (key == "dm_hac_lag") {
        dm_hac_lag = to_count(key, v);
    } else if (key == "bh_alpha") {
        bh_alpha = to_double(key, v);
    } else if (key == "seed") {
        seed = static_cast<std::uint64_t>(to_count(key, v));
    } else if (key == "workers") {
        workers = static_cast<unsigned>(std::max<std::size_t>(1, to_count(key, v)));
    } else {
        throw DomainError("config: unknown key '" + key + "'");
    }
    static const std::set<std::string> list_keys{"predictors", "methods", "stations", "families",
                                                 "lambda_grid", "df_grid", "alphas"};
    if (list_keys.count(key)) {
        std::string joined;
        for (const auto& item : split_list(v)) joined += (joined.empty() ? "" : ",") + item;
        raw[key] = joined;
    } else {
        raw[key] = v;
    }
}

void RunConfig::validate() const {
    for (const auto& m : methods) {
        if (std::find(kAllMethods.begin(), kAllMethods.end(), m) == kAllMethods.end()) {
            throw DomainError("unknown method '" + m + "'");
        }
    }
    if (methods.empty()) throw DomainError("config: no methods");
    if (crps_k < 2) throw DomainError("config: crps_k must be at least 2");
    if (interval_m < 2) throw DomainError("config: interval_m must be at least 2");
    if (!(bh_alpha > 0.0 && bh_alpha < 1.0)) throw DomainError("config: bh_alpha outside (0, 1)");
    for (double a : alphas) {
        if (!(a > 0.0 && a < 1.0)) throw DomainError("config: alpha outside (0, 1)");
    }
    if (spline_basis < 4) throw DomainError("config: spline_basis must be at least 4");
    if (train_start && train_end && *train_end < *train_start) throw DomainError("config: train_end before train_start");
    if (test_start && test_end && *test_end < *test_start) throw DomainError("config: test_end before test_start");
    // Open ends extend to infinity; without train_end training stops before test_start.
    if (train_end && (test_start || test_end)) {
        const bool test_after = test_start && *train_end < *test_start;
        const bool test_before = test_end && train_start && *test_end < *train_start;
        if (!test_after && !test_before) throw DomainError("config: training and test periods overlap");
    }
}

std::vector<std::string> RunConfig::predictor_names() const {
    if (!predictors.empty()) return predictors;
    if (variable_set == "reduced") return {response + "_mean", response + "_sd"};
    std::vector<std::string> out;
    for (const auto& v : kExtendedVariables) out.push_back(v + "_mean");
    for (const auto& v : kExtendedVariables) out.push_back(v + "_sd");
    return out;
}

std::vector<double> RunConfig::prediction_levels() const {
    std::vector<double> lv = alphas;
    if (lv.empty()) {
        lv = crps_levels(crps_k);
        lv.push_back(0.5);
        const auto [lo, hi] = central_interval_levels(interval_m);
        lv.push_back(lo);
        lv.push_back(hi);
    }
    std::sort(lv.begin(), lv.end());
    lv.erase(std::unique(lv.begin(), lv.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), lv.end());
    return lv;
}

std::string RunConfig::hash() const {
    std::string canon;
    for (const auto& [k, v] : raw) canon += k + "=" + v + "\n";
    return fnv1a_hex(canon);
}

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        line = strip(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DomainError("config line " + std::to_string(lineno) + ": expected key=value");
        try {
            cfg.set(strip(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const DomainError& e) {
            throw DomainError("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config " + path);
    return parse_config(in);
}

DVineOptions vine_options(const RunConfig& cfg, const std::string& method) {
    DVineOptions o = method == "DVQR" ? dvqr_options() : DVineOptions{};
    if (method != "DVQR") o.pair.families = cfg.families;
    o.max_predictors = cfg.max_predictors;
    o.pair.df_grid = cfg.df_grid;
    o.pair.lambda_grid = cfg.lambda_grid;
    o.pair.spline.n_basis = cfg.spline_basis;
    if (method == "GAM-DVQR-T1") o.pair.design = DesignKind::LinearSinCos;
    else if (method == "GAM-DVQR-T2") o.pair.design = DesignKind::CyclicSpline;
    else if (method == "GAM-DVQR-C" || method == "DVQR") o.pair.design = DesignKind::Constant;
    else throw DomainError("not a D-vine method: " + method);
    return o;
}

MarginSpec margin_spec_for(const std::string& name, bool kde) {
    MarginSpec s;
    s.kde = kde;
    const auto us = name.rfind('_');
    const std::string var = us == std::string::npos ? name : name.substr(0, us);
    const std::string kind = us == std::string::npos ? "" : name.substr(us + 1);
    const bool unit_var = var == "r2m" || var == "tcc";
    if (kind == "mean") {
        if (unit_var) s.candidates = candidate_set('B');
        else if (var == "ws10m" || var == "wg10m") s.candidates = candidate_set('C');
        else s.candidates = candidate_set('A');
    } else if (kind == "sd") {
        s.candidates = candidate_set(unit_var ? 'B' : 'C');
    } else {
        s.candidates = candidate_set('A');
    }
    s.fallback = candidate_set('A');
    return s;
}

}  // namespace gamdvqr
