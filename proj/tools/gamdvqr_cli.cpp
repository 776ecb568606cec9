// Command-line front end: ingest, simulate, train, predict, verify, contour.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gamdvqr/config.hpp"
#include "gamdvqr/dataset.hpp"
#include "gamdvqr/pipeline.hpp"
#include "gamdvqr/simulate.hpp"
#include "gamdvqr/stats.hpp"

namespace fs = std::filesystem;
using namespace gamdvqr;

namespace {

struct CommonFlags {
    std::string config;
    std::string methods;
    std::string stations;
    std::string alphas;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    long long seed = -1;
    int workers = 0;
};

RunConfig build_config(const CommonFlags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
    for (const auto& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw DomainError("--set expects key=value, got " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!f.methods.empty()) cfg.set("methods", f.methods);
    if (!f.stations.empty()) cfg.set("stations", f.stations);
    if (!f.alphas.empty()) cfg.set("alphas", f.alphas);
    if (f.seed >= 0) cfg.set("seed", std::to_string(f.seed));
    if (f.workers > 0) cfg.set("workers", std::to_string(f.workers));
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config, "key=value configuration file");
    app->add_option("--method", f.methods, "comma-separated methods (EMOS, EMOS-GB, DVQR, GAM-DVQR-C/T1/T2)");
    app->add_option("--stations", f.stations, "comma-separated station ids (default: all)");
    app->add_option("--seed", f.seed, "random seed");
    app->add_option("--workers", f.workers, "number of worker threads");
    app->add_option("--alpha-list", f.alphas, "comma-separated quantile levels");
    app->add_option("--out-dir", f.out_dir, "output directory");
    app->add_option("--set", f.overrides, "configuration override key=value (repeatable)");
}

ForecastDataset load_dataset(const std::string& path) {
    ForecastDataset ds = ingest_csv(path);
    derive_variables(ds);
    return ds;
}

int report_status(const std::vector<JobStatus>& status) {
    std::size_t ok = 0;
    for (const auto& s : status) {
        std::cout << s.station << '\t' << s.method << '\t' << (s.ok ? "ok" : "skipped") << '\t' << s.message << '\n';
        ok += s.ok;
    }
    return ok > 0 || status.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"D-vine GAM copula quantile regression and forecast verification"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string data_path, model_dir, pred_dir, scenario = "gaussian-oracle", model_file;
    std::size_t sim_stations = 1, sim_days = 1826, sim_members = 10, grid_n = 61, tree = 1, edge = 0;
    int doy = 1;

    auto* ingest = app.add_subcommand("ingest", "parse a forecast CSV, derive variables and report");
    ingest->add_option("input", data_path, "input CSV")->required();
    ingest->add_option("--out-dir", flags.out_dir, "output directory");

    auto* sim = app.add_subcommand("simulate", "write a synthetic scenario dataset");
    sim->add_option("--scenario", scenario, "gaussian-oracle | time-varying-tau | informative-subset | calibrated-ensemble");
    sim->add_option("--seed", flags.seed, "random seed");
    sim->add_option("--stations", sim_stations, "number of stations");
    sim->add_option("--days", sim_days, "number of days from 2015-01-01");
    sim->add_option("--members", sim_members, "ensemble size (calibrated-ensemble)");
    sim->add_option("--out-dir", flags.out_dir, "output directory");

    auto* train = app.add_subcommand("train", "fit per-station models");
    add_common(train, flags);
    train->add_option("--data", data_path, "input CSV")->required();

    auto* predict = app.add_subcommand("predict", "write quantile forecasts for the test period");
    add_common(predict, flags);
    predict->add_option("--data", data_path, "input CSV")->required();
    predict->add_option("--models", model_dir, "directory given to train --out-dir")->required();

    auto* verify = app.add_subcommand("verify", "score predictions against observations");
    add_common(verify, flags);
    verify->add_option("--data", data_path, "input CSV")->required();
    verify->add_option("--predictions", pred_dir, "directory given to predict --out-dir")->required();

    auto* contour = app.add_subcommand("contour", "normalized contour density of one D-vine edge");
    contour->add_option("--model", model_file, "model JSON")->required();
    contour->add_option("--tree", tree, "tree (1-based)");
    contour->add_option("--edge", edge, "edge within the tree (0-based)");
    contour->add_option("--doy", doy, "day of year for the tau model");
    contour->add_option("--grid", grid_n, "grid points per axis");
    contour->add_option("--out-dir", flags.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            const ForecastDataset ds = load_dataset(data_path);
            fs::create_directories(flags.out_dir);
            std::ofstream csv((fs::path(flags.out_dir) / "dataset.csv").string());
            write_csv(ds, csv);
            const nlohmann::json rep{{"rows", ds.report.rows},
                                     {"stations", ds.report.stations},
                                     {"missing_obs", ds.report.missing_obs},
                                     {"missing_values", ds.report.missing_values},
                                     {"variables", ds.variables},
                                     {"notes", ds.report.notes}};
            std::ofstream((fs::path(flags.out_dir) / "ingest_report.json").string()) << rep.dump(2) << '\n';
            std::cout << rep.dump(2) << '\n';
        } else if (*sim) {
            SimulateOptions o;
            o.stations = sim_stations;
            o.days = sim_days;
            o.members = sim_members;
            const auto ds = simulate(scenario, flags.seed < 0 ? 1 : static_cast<std::uint64_t>(flags.seed), o);
            fs::create_directories(flags.out_dir);
            const auto path = fs::path(flags.out_dir) / (scenario + ".csv");
            std::ofstream out(path.string());
            write_csv(ds, out);
            std::cout << path.string() << '\n';
        } else if (*train) {
            const RunConfig cfg = build_config(flags);
            return report_status(run_train(cfg, load_dataset(data_path), flags.out_dir));
        } else if (*predict) {
            const RunConfig cfg = build_config(flags);
            return report_status(run_predict(cfg, load_dataset(data_path), model_dir, flags.out_dir));
        } else if (*verify) {
            const RunConfig cfg = build_config(flags);
            const ScoreReport rep = run_verify(cfg, load_dataset(data_path), pred_dir, flags.out_dir);
            std::cout << "method\tn\tcrps\tmae\trmse\tcoverage\twidth\tcrpss\n";
            for (const auto& s : rep.overall) {
                std::cout << s.method << '\t' << s.n << '\t' << s.crps << '\t' << s.mae << '\t' << s.rmse << '\t'
                          << s.coverage << '\t' << s.width << '\t' << s.crpss << '\n';
            }
        } else if (*contour) {
            fs::create_directories(flags.out_dir);
            const auto path = fs::path(flags.out_dir) / "contour.csv";
            run_contour(model_file, tree, edge, doy, grid_n, path.string());
            std::cout << path.string() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
