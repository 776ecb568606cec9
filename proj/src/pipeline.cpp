#include "gamdvqr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "gamdvqr/dvine.hpp"
#include "gamdvqr/emos.hpp"
#include "gamdvqr/serialize.hpp"
#include "gamdvqr/stats.hpp"
#include "gamdvqr/verification.hpp"

namespace fs = std::filesystem;

namespace gamdvqr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMinWindowCases = 30;
std::mutex log_mutex;

void warn(const std::string& msg) {
    const std::lock_guard<std::mutex> lock(log_mutex);
    std::cerr << "warning: " << msg << '\n';
}

std::string num(double v) {
    if (!std::isfinite(v)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string file_stem(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (c == '/' || c == '\\' || c == ' ') c = '_';
    }
    return out;
}

std::string model_path(const std::string& dir, const std::string& station, const std::string& method) {
    return (fs::path(dir) / "models" / (file_stem(station) + "__" + method + ".json")).string();
}

bool in_range(Date d, const std::optional<Date>& lo, const std::optional<Date>& hi) {
    return (!lo || d >= *lo) && (!hi || d <= *hi);
}

// Cases of one station with finite predictors (and observation when required).
struct Cases {
    std::vector<std::size_t> record;
    std::vector<Date> dates;
    std::vector<CovariateRow> rows;
    std::vector<double> y;
    std::vector<std::vector<double>> x;  // per case
};

Cases collect(const ForecastDataset& ds, const std::vector<std::size_t>& idx, const std::vector<std::string>& names,
              bool require_obs) {
    Cases c;
    std::vector<double> xi(names.size());
    for (std::size_t i : idx) {
        const auto& r = ds.records[i];
        if (require_obs && r.obs_missing) continue;
        bool ok = true;
        for (std::size_t j = 0; j < names.size() && ok; ++j) {
            xi[j] = ds.value(r, names[j]);
            ok = std::isfinite(xi[j]);
        }
        if (!ok) continue;
        c.record.push_back(i);
        c.dates.push_back(r.date);
        c.rows.push_back(r.covariates());
        c.y.push_back(r.obs_missing ? kNaN : r.obs);
        c.x.push_back(xi);
    }
    return c;
}

std::vector<std::vector<double>> columns(const std::vector<std::vector<double>>& x, std::size_t p) {
    std::vector<std::vector<double>> cols(p, std::vector<double>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < p; ++j) cols[j][i] = x[i][j];
    }
    return cols;
}

EmosData emos_data(const Cases& c, const std::vector<std::string>& names) {
    EmosData d;
    d.y = c.y;
    d.names = names;
    d.x.resize(static_cast<Eigen::Index>(c.y.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < c.y.size(); ++i) {
        for (std::size_t j = 0; j < names.size(); ++j) d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.x[i][j];
    }
    return d;
}

std::vector<std::string> emos_names(const RunConfig& cfg) { return {"sin", "cos", cfg.response + "_mean", cfg.response + "_sd"}; }

std::vector<std::string> emos_gb_names(const RunConfig& cfg) {
    auto names = cfg.predictor_names();
    names.push_back("sin");
    names.push_back("cos");
    return names;
}

std::vector<std::string> method_predictors(const RunConfig& cfg, const std::string& method) {
    if (method == "EMOS") return emos_names(cfg);
    if (method == "EMOS-GB") return emos_gb_names(cfg);
    return cfg.predictor_names();
}

DVqrConfig dvqr_config(const RunConfig& cfg, const std::string& method, const std::vector<std::string>& names) {
    const bool kde = method == "DVQR";
    DVqrConfig dc;
    dc.vine = vine_options(cfg, method);
    dc.response_margin = margin_spec_for(cfg.response, kde);
    for (const auto& n : names) dc.predictor_margins.push_back(margin_spec_for(n, kde));
    return dc;
}

std::map<std::string, std::vector<std::size_t>> selected_stations(const ForecastDataset& ds, const RunConfig& cfg) {
    auto all = ds.by_station();
    if (cfg.stations.empty()) return all;
    std::map<std::string, std::vector<std::size_t>> out;
    for (const auto& s : cfg.stations) {
        const auto it = all.find(s);
        if (it == all.end()) {
            warn("station " + s + " not in dataset");
            continue;
        }
        out.insert(*it);
    }
    return out;
}

void enforce_monotone(std::vector<double>& q) {
    for (std::size_t i = 1; i < q.size(); ++i) q[i] = std::max(q[i], q[i - 1]);
}

}  // namespace

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

StationSplit split_station(const ForecastDataset& ds, const std::vector<std::size_t>& idx, const RunConfig& cfg) {
    StationSplit s;
    std::optional<Date> train_hi = cfg.train_end;
    if (!train_hi && cfg.test_start) train_hi = *cfg.test_start - std::chrono::days{1};
    if (!train_hi && !cfg.train_start) throw DomainError("config: a training period or test_start is required");
    for (std::size_t i : idx) {
        const Date d = ds.records[i].date;
        if (in_range(d, cfg.train_start, train_hi)) s.train.push_back(i);
        else if ((cfg.test_start || cfg.test_end) && in_range(d, cfg.test_start, cfg.test_end)) s.test.push_back(i);
    }
    return s;
}

std::vector<JobStatus> run_train(const RunConfig& cfg, const ForecastDataset& ds, const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(fs::path(out_dir) / "models");
    const auto stations = selected_stations(ds, cfg);
    std::vector<std::pair<std::string, std::vector<std::size_t>>> jobs(stations.begin(), stations.end());
    std::vector<std::vector<JobStatus>> results(jobs.size());
    const std::string hash = cfg.hash();

    parallel_for(jobs.size(), cfg.workers, [&](std::size_t js) {
        const auto& [station, idx] = jobs[js];
        const StationSplit split = split_station(ds, idx, cfg);
        for (const auto& method : cfg.methods) {
            JobStatus st{station, method, false, ""};
            try {
                const auto names = method_predictors(cfg, method);
                const Cases c = collect(ds, split.train, names, true);
                if (c.y.size() < cfg.min_train) {
                    throw DomainError("insufficient training data (" + std::to_string(c.y.size()) + " cases)");
                }
                ModelFile mf{method, station, hash, {}};
                if (method == "EMOS") {
                    EmosOptions o = seasonal_emos_options(cfg.response + "_mean", cfg.response + "_sd", cfg.emos_loss);
                    o.max_iter = cfg.emos_max_iter;
                    o.rel_tol = cfg.emos_rel_tol;
                    mf.model = to_json(fit_emos(emos_data(c, names), o));
                } else if (method == "EMOS-GB") {
                    const EmosGbOptions o{cfg.emosgb_loss, cfg.emosgb_max_iter, cfg.emosgb_step, cfg.emosgb_stop};
                    mf.model = to_json(fit_emos_gb(emos_data(c, names), o).model);
                } else if (method == "DVQR") {
                    const WindowTrainingSet w{names, c.dates, c.y, c.x, cfg.window_n, cfg.window_k};
                    mf.model = to_json(w);
                } else {
                    DVineModel m = fit_dvqr(c.y, columns(c.x, names.size()), names, c.rows,
                                            dvqr_config(cfg, method, names));
                    m.config_hash = hash;
                    mf.model = to_json(m);
                }
                save_model_file(model_path(out_dir, station, method), mf);
                st.ok = true;
                st.message = "trained on " + std::to_string(c.y.size()) + " cases";
            } catch (const std::exception& e) {
                st.message = e.what();
                warn("station " + station + ", " + method + ": skipped: " + e.what());
            }
            results[js].push_back(st);
        }
    });

    std::vector<JobStatus> out;
    for (auto& r : results) out.insert(out.end(), r.begin(), r.end());
    return out;
}

std::vector<JobStatus> run_predict(const RunConfig& cfg, const ForecastDataset& ds, const std::string& model_dir,
                                   const std::string& out_dir) {
    cfg.validate();
    if (!cfg.test_start && !cfg.test_end) throw DomainError("config: a test period is required for predict");
    fs::create_directories(out_dir);
    const auto stations = selected_stations(ds, cfg);
    std::vector<std::pair<std::string, std::vector<std::size_t>>> jobs(stations.begin(), stations.end());
    const auto levels = cfg.prediction_levels();
    const std::string hash = cfg.hash();

    std::vector<JobStatus> all_status;
    for (const auto& method : cfg.methods) {
        std::vector<std::string> qlines(jobs.size()), plines(jobs.size());
        std::vector<JobStatus> status(jobs.size());
        const bool gaussian = method == "EMOS" || method == "EMOS-GB";

        parallel_for(jobs.size(), cfg.workers, [&](std::size_t js) {
            const auto& [station, idx] = jobs[js];
            JobStatus& st = status[js];
            st = {station, method, false, ""};
            try {
                const ModelFile mf = load_model_file(model_path(model_dir, station, method));
                if (mf.method != method) throw DomainError("model file holds method " + mf.method);
                if (mf.config_hash != hash) warn("station " + station + ", " + method + ": config hash differs from training");
                const StationSplit split = split_station(ds, idx, cfg);
                std::ostringstream q, p;
                std::size_t written = 0, skipped = 0;

                auto emit = [&](Date d, std::vector<double> qs) {
                    enforce_monotone(qs);
                    const std::string date = format_date(d);
                    for (std::size_t a = 0; a < levels.size(); ++a) {
                        q << station << ',' << date << ',' << num(levels[a]) << ',' << num(qs[a]) << '\n';
                    }
                    ++written;
                };

                if (gaussian) {
                    const EmosModel m = emos_from_json(mf.model);
                    const Cases c = collect(ds, split.test, m.names, false);
                    for (std::size_t i = 0; i < c.x.size(); ++i) {
                        const double mu = m.mu(c.x[i]), sigma = m.sigma(c.x[i]);
                        std::vector<double> qs;
                        for (double a : levels) qs.push_back(mu + sigma * norm_quantile(a));
                        emit(c.dates[i], qs);
                        p << station << ',' << format_date(c.dates[i]) << ',' << num(mu) << ',' << num(sigma) << '\n';
                    }
                } else if (method == "DVQR") {
                    const WindowTrainingSet w = window_from_json(mf.model);
                    const Cases c = collect(ds, split.test, w.predictor_names, false);
                    const DVqrConfig dc = dvqr_config(cfg, method, w.predictor_names);
                    for (std::size_t i = 0; i < c.x.size(); ++i) {
                        // Pool: stored training rows plus test-period rows observed before this day.
                        std::vector<Date> dates = w.dates;
                        std::vector<double> y = w.y;
                        std::vector<std::vector<double>> x = w.x;
                        for (std::size_t k = 0; k < i; ++k) {
                            if (std::isnan(c.y[k]) || c.dates[k] >= c.dates[i]) continue;
                            dates.push_back(c.dates[k]);
                            y.push_back(c.y[k]);
                            x.push_back(c.x[k]);
                        }
                        const auto win = rolling_window(dates, c.dates[i], w.window_n, w.window_k);
                        if (win.size() < kMinWindowCases) {
                            ++skipped;
                            continue;
                        }
                        std::vector<double> wy;
                        std::vector<std::vector<double>> wx;
                        std::vector<CovariateRow> wr;
                        for (std::size_t k : win) {
                            wy.push_back(y[k]);
                            wx.push_back(x[k]);
                            wr.push_back(CovariateRow::from_doy(day_of_year(dates[k])));
                        }
                        try {
                            const DVineModel m =
                                fit_dvqr(wy, columns(wx, w.predictor_names.size()), w.predictor_names, wr, dc);
                            emit(c.dates[i], m.predict_quantiles(c.x[i], c.rows[i], levels));
                        } catch (const std::exception& e) {
                            ++skipped;
                            warn("station " + station + ", DVQR " + format_date(c.dates[i]) + ": " + e.what());
                        }
                    }
                } else {
                    const DVineModel m = dvine_from_json(mf.model);
                    const Cases c = collect(ds, split.test, m.predictor_names, false);
                    for (std::size_t i = 0; i < c.x.size(); ++i) {
                        try {
                            emit(c.dates[i], m.predict_quantiles(c.x[i], c.rows[i], levels));
                        } catch (const DomainError& e) {
                            ++skipped;
                            warn("station " + station + ", " + method + " " + format_date(c.dates[i]) + ": " + e.what());
                        }
                    }
                }
                qlines[js] = q.str();
                plines[js] = p.str();
                st.ok = true;
                st.message = std::to_string(written) + " forecasts" +
                             (skipped ? ", " + std::to_string(skipped) + " skipped" : std::string());
            } catch (const std::exception& e) {
                st.message = e.what();
                warn("station " + station + ", " + method + ": " + e.what());
            }
        });

        std::ofstream q((fs::path(out_dir) / ("predictions_" + method + ".csv")).string());
        q << "station,date,alpha,quantile\n";
        for (const auto& s : qlines) q << s;
        if (gaussian) {
            std::ofstream p((fs::path(out_dir) / ("params_" + method + ".csv")).string());
            p << "station,date,mu,sigma\n";
            for (const auto& s : plines) p << s;
        }
        all_status.insert(all_status.end(), status.begin(), status.end());
    }
    return all_status;
}

namespace {

using CaseKey = std::pair<std::string, std::string>;  // station, date

struct QuantileForecast {
    std::vector<double> alpha, q;

    double quantile(double p) const {
        if (p <= alpha.front()) return q.front();
        if (p >= alpha.back()) return q.back();
        const auto it = std::upper_bound(alpha.begin(), alpha.end(), p);
        const std::size_t i = static_cast<std::size_t>(it - alpha.begin());
        const double w = (p - alpha[i - 1]) / (alpha[i] - alpha[i - 1]);
        return q[i - 1] + w * (q[i] - q[i - 1]);
    }
    // Piecewise-linear CDF through the quantiles; tails split the remaining mass in half.
    double cdf(double y) const {
        if (y < q.front()) return 0.5 * alpha.front();
        if (y >= q.back()) return 1.0 - 0.5 * (1.0 - alpha.back());
        for (std::size_t i = 1; i < q.size(); ++i) {
            if (y < q[i]) {
                const double w = q[i] > q[i - 1] ? (y - q[i - 1]) / (q[i] - q[i - 1]) : 1.0;
                return alpha[i - 1] + w * (alpha[i] - alpha[i - 1]);
            }
        }
        return alpha.back();
    }
};

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) f.push_back(cur);
    return f;
}

std::map<CaseKey, QuantileForecast> read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("station,date,alpha,quantile", 0) != 0) throw DomainError(path + ": unexpected header");
    std::map<CaseKey, std::vector<std::pair<double, double>>> raw;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_line(line);
        if (f.size() != 4) throw DomainError(path + ": line " + std::to_string(lineno) + ": expected 4 fields");
        raw[{f[0], f[1]}].push_back({std::stod(f[2]), std::stod(f[3])});
    }
    std::map<CaseKey, QuantileForecast> out;
    for (auto& [k, v] : raw) {
        std::sort(v.begin(), v.end());
        QuantileForecast qf;
        for (const auto& [a, q] : v) {
            qf.alpha.push_back(a);
            qf.q.push_back(q);
        }
        out[k] = std::move(qf);
    }
    return out;
}

std::map<CaseKey, std::pair<double, double>> read_params(const std::string& path) {
    std::map<CaseKey, std::pair<double, double>> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_line(line);
        if (f.size() != 4) throw DomainError(path + ": malformed row");
        out[{f[0], f[1]}] = {std::stod(f[2]), std::stod(f[3])};
    }
    return out;
}

struct CaseScore {
    std::string station;
    std::string date;
    double obs, crps, median, mean, lower, upper, pit;
};

MethodScores aggregate(const std::string& method, const std::string& station, const std::vector<const CaseScore*>& cs) {
    MethodScores s;
    s.method = method;
    s.station = station;
    s.n = cs.size();
    s.crpss = kNaN;
    if (cs.empty()) return s;
    std::vector<double> obs, med, mn, lo, hi;
    double crps = 0.0;
    for (const auto* c : cs) {
        obs.push_back(c->obs);
        med.push_back(c->median);
        mn.push_back(c->mean);
        lo.push_back(c->lower);
        hi.push_back(c->upper);
        crps += c->crps;
    }
    s.crps = crps / static_cast<double>(cs.size());
    s.mae = mae(med, obs);
    s.rmse = rmse(mn, obs);
    const auto cw = coverage_width(lo, hi, obs);
    s.coverage = cw.coverage;
    s.width = cw.width;
    return s;
}

Json nan_to_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

ScoreReport run_verify(const RunConfig& cfg, const ForecastDataset& ds, const std::string& pred_dir,
                       const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);
    const auto [lo_level, hi_level] = central_interval_levels(cfg.interval_m);
    const auto crps_lv = crps_levels(cfg.crps_k);

    // Observations by (station, date).
    std::map<CaseKey, const ForecastRecord*> obs;
    std::set<std::string> wanted(cfg.stations.begin(), cfg.stations.end());
    for (const auto& r : ds.records) {
        if (r.obs_missing) continue;
        if (!wanted.empty() && !wanted.count(r.station)) continue;
        obs[{r.station, format_date(r.date)}] = &r;
    }
    auto in_training = [&](const std::string& date) {
        if (!cfg.train_start && !cfg.train_end) return false;
        return in_range(parse_date(date), cfg.train_start, cfg.train_end);
    };

    std::map<std::string, std::vector<CaseScore>> cases;  // method -> cases
    std::vector<std::string> methods;
    for (const auto& method : cfg.methods) {
        const auto path = fs::path(pred_dir) / ("predictions_" + method + ".csv");
        if (!fs::exists(path)) {
            warn("no predictions for " + method);
            continue;
        }
        const auto preds = read_predictions(path.string());
        const auto params = read_params((fs::path(pred_dir) / ("params_" + method + ".csv")).string());
        auto& out = cases[method];
        methods.push_back(method);
        for (const auto& [key, qf] : preds) {
            if (in_training(key.second)) {
                throw DomainError("verification period intersects the training period (" + key.first + " " + key.second + ")");
            }
            const auto it = obs.find(key);
            if (it == obs.end()) continue;
            const double y = it->second->obs;
            CaseScore c{key.first, key.second, y, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
            const auto pit = params.find(key);
            if (pit != params.end()) {
                const auto [mu, sigma] = pit->second;
                c.crps = crps_normal(mu, sigma, y);
                c.median = mu;
                c.mean = mu;
                c.lower = mu + sigma * norm_quantile(lo_level);
                c.upper = mu + sigma * norm_quantile(hi_level);
                c.pit = norm_cdf((y - mu) / sigma);
            } else {
                std::vector<double> z;
                for (double a : crps_lv) z.push_back(qf.quantile(a));
                c.crps = crps_from_quantiles(z, y);
                c.median = qf.quantile(0.5);
                c.mean = mean(z);
                c.lower = qf.quantile(lo_level);
                c.upper = qf.quantile(hi_level);
                c.pit = qf.cdf(y);
            }
            out.push_back(c);
        }
    }

    ScoreReport rep;
    // Raw ensemble, when the response has members.
    const int resp = ds.variable_index(cfg.response);
    if (resp >= 0 && ds.member_count() >= 2) {
        std::mt19937_64 rng(cfg.seed);
        auto& out = cases["ENS"];
        std::vector<std::size_t> ranks;
        std::size_t m = 0;
        for (const auto& [key, r] : obs) {
            const auto& mem = r->members[static_cast<std::size_t>(resp)];
            if (mem.size() < 2) continue;
            if (cfg.test_start || cfg.test_end) {
                if (!in_range(r->date, cfg.test_start, cfg.test_end)) continue;
            }
            m = std::max(m, mem.size());
            const auto [emin, emax] = std::minmax_element(mem.begin(), mem.end());
            std::vector<double> sorted = mem;
            std::sort(sorted.begin(), sorted.end());
            CaseScore c{key.first, key.second, r->obs, crps_ensemble(mem, r->obs, cfg.crps_k),
                        empirical_quantile(sorted, 0.5), mean(mem), *emin, *emax, kNaN};
            out.push_back(c);
            if (mem.size() == m) ranks.push_back(ensemble_rank(r->obs, mem, rng));
        }
        if (!out.empty()) {
            methods.push_back("ENS");
            rep.rank_histogram["ENS"] = rank_histogram(ranks, m);
        }
    }

    const std::string ref = std::find(methods.begin(), methods.end(), cfg.reference_method) != methods.end()
                                ? cfg.reference_method
                                : std::string();
    std::set<std::string> station_set;
    for (const auto& [m, cs] : cases) {
        for (const auto& c : cs) station_set.insert(c.station);
    }

    for (const auto& method : methods) {
        const auto& cs = cases[method];
        std::vector<const CaseScore*> all;
        std::vector<double> pits, series;
        for (const auto& c : cs) {
            all.push_back(&c);
            series.push_back(c.crps);
            if (std::isfinite(c.pit)) pits.push_back(c.pit);
        }
        rep.crps_series[method] = series;
        rep.overall.push_back(aggregate(method, "", all));
        if (!pits.empty()) rep.pit_histogram[method] = pit_histogram(pits, cfg.interval_m + 1);
        for (const auto& st : station_set) {
            std::vector<const CaseScore*> sc;
            for (const auto& c : cs) {
                if (c.station == st) sc.push_back(&c);
            }
            if (!sc.empty()) rep.per_station.push_back(aggregate(method, st, sc));
        }
    }
    if (!ref.empty()) {
        auto ref_crps = [&](const std::string& station) {
            for (const auto& s : (station.empty() ? rep.overall : rep.per_station)) {
                if (s.method == ref && s.station == station) return s.crps;
            }
            return kNaN;
        };
        for (auto& s : rep.overall) s.crpss = ref_crps("") > 0.0 ? crpss(s.crps, ref_crps("")) : kNaN;
        for (auto& s : rep.per_station) {
            const double r = ref_crps(s.station);
            s.crpss = r > 0.0 ? crpss(s.crps, r) : kNaN;
        }

        // Diebold-Mariano per station against the reference, BH across stations.
        std::map<CaseKey, double> ref_by_case;
        for (const auto& c : cases[ref]) ref_by_case[{c.station, c.date}] = c.crps;
        for (const auto& method : methods) {
            if (method == ref) continue;
            std::vector<DmRow> rows;
            for (const auto& st : station_set) {
                std::vector<double> a, b;
                for (const auto& c : cases[method]) {
                    if (c.station != st) continue;
                    const auto it = ref_by_case.find({c.station, c.date});
                    if (it == ref_by_case.end()) continue;
                    a.push_back(c.crps);
                    b.push_back(it->second);
                }
                if (a.size() < 30) continue;
                const DmResult r = dm_test(a, b, Alternative::TwoSided, cfg.dm_hac_lag);
                rows.push_back({st, method, ref, r.statistic, r.p_value, false});
            }
            std::vector<double> p;
            for (const auto& r : rows) p.push_back(r.p_value);
            const auto rej = bh_adjust(p, cfg.bh_alpha);
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i].reject = rej[i];
            rep.dm.insert(rep.dm.end(), rows.begin(), rows.end());
        }
    }

    // Files.
    {
        std::ofstream f((fs::path(out_dir) / "scores.csv").string());
        f << "station,method,n,crps,mae,rmse,coverage,width,crpss\n";
        auto row = [&](const MethodScores& s) {
            f << (s.station.empty() ? "ALL" : s.station) << ',' << s.method << ',' << s.n << ',' << num(s.crps) << ','
              << num(s.mae) << ',' << num(s.rmse) << ',' << num(s.coverage) << ',' << num(s.width) << ','
              << num(s.crpss) << '\n';
        };
        for (const auto& s : rep.per_station) row(s);
        for (const auto& s : rep.overall) row(s);
    }
    {
        std::ofstream f((fs::path(out_dir) / "dm.csv").string());
        f << "station,method,reference,statistic,p_value,bh_reject\n";
        for (const auto& d : rep.dm) {
            f << d.station << ',' << d.method << ',' << d.reference << ',' << num(d.statistic) << ','
              << num(d.p_value) << ',' << (d.reject ? 1 : 0) << '\n';
        }
    }
    auto write_hist = [&](const std::string& name, const std::map<std::string, std::vector<std::size_t>>& h) {
        std::ofstream f((fs::path(out_dir) / name).string());
        f << "method,bin,count\n";
        for (const auto& [m, counts] : h) {
            for (std::size_t i = 0; i < counts.size(); ++i) f << m << ',' << i + 1 << ',' << counts[i] << '\n';
        }
    };
    write_hist("pit_histogram.csv", rep.pit_histogram);
    write_hist("rank_histogram.csv", rep.rank_histogram);

    Json summary;
    summary["reference"] = ref;
    summary["nominal_coverage"] = 100.0 * nominal_coverage(cfg.interval_m);
    summary["crps_k"] = cfg.crps_k;
    for (const auto& s : rep.overall) {
        Json m{{"n", s.n},         {"crps", nan_to_null(s.crps)},         {"mae", nan_to_null(s.mae)},
               {"rmse", nan_to_null(s.rmse)}, {"coverage", nan_to_null(s.coverage)}, {"width", nan_to_null(s.width)},
               {"crpss", nan_to_null(s.crpss)}};
        if (rep.pit_histogram.count(s.method)) {
            m["pit_chi2_p"] = chi2_uniformity(rep.pit_histogram.at(s.method)).p_value;
        }
        if (rep.rank_histogram.count(s.method)) {
            m["rank_chi2_p"] = chi2_uniformity(rep.rank_histogram.at(s.method)).p_value;
        }
        std::size_t tested = 0, rejected = 0;
        for (const auto& d : rep.dm) {
            if (d.method != s.method) continue;
            ++tested;
            rejected += d.reject;
        }
        if (tested > 0) m["dm_bh_rejections"] = {{"tested", tested}, {"rejected", rejected}};
        summary["methods"][s.method] = m;
    }
    std::ofstream((fs::path(out_dir) / "summary.json").string()) << summary.dump(2) << '\n';
    return rep;
}

void run_contour(const std::string& model_path_str, std::size_t tree, std::size_t edge, int doy, std::size_t grid_n,
                 const std::string& out_csv) {
    const ModelFile mf = load_model_file(model_path_str);
    if (!mf.model.contains("trees")) throw DomainError(model_path_str + ": not a D-vine model");
    const DVineModel m = dvine_from_json(mf.model);
    if (tree < 1 || tree > m.trees.size()) throw DomainError("contour: tree index out of range");
    if (edge >= m.trees[tree - 1].size()) throw DomainError("contour: edge index out of range");
    const ContourGrid g = contour_grid(m.trees[tree - 1][edge], CovariateRow::from_doy(doy), grid_n);
    std::ofstream f(out_csv);
    if (!f) throw DomainError("cannot write " + out_csv);
    f << "z_y\\z_x";
    for (double z : g.z) f << ',' << num(z);
    f << '\n';
    for (std::size_t i = 0; i < g.z.size(); ++i) {
        f << num(g.z[i]);
        for (double d : g.d[i]) f << ',' << num(d);
        f << '\n';
    }
}

}  // namespace gamdvqr
