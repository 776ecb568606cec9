#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "gamdvqr/config.hpp"
#include "gamdvqr/pipeline.hpp"
#include "gamdvqr/serialize.hpp"
#include "gamdvqr/simulate.hpp"
#include "gamdvqr/stats.hpp"

using namespace gamdvqr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("gamdvqr_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_config() {
    RunConfig c;
    c.set("methods", "EMOS,GAM-DVQR-C");
    c.set("train_start", "2015-01-01");
    c.set("train_end", "2018-12-31");
    c.set("test_start", "2019-12-01");
    c.set("test_end", "2019-12-31");
    return c;
}

}  // namespace

TEST(Simulate, Deterministic) {
    SimulateOptions o;
    o.stations = 2;
    o.days = 100;
    for (const auto& s : kScenarios) {
        std::stringstream a, b, c;
        write_csv(simulate(s, 5, o), a);
        write_csv(simulate(s, 5, o), b);
        write_csv(simulate(s, 6, o), c);
        EXPECT_EQ(a.str(), b.str()) << s;
        EXPECT_NE(a.str(), c.str()) << s;
    }
    EXPECT_THROW(simulate("nope", 1, o), DomainError);
}

TEST(ParallelFor, CoversRangeAndPropagatesErrors) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(50, 3, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(10, 2,
                              [](std::size_t i) {
                                  if (i == 7) throw DomainError("boom");
                              }),
                 DomainError);
}

TEST(Pipeline, TrainPredictVerify) {
    SimulateOptions so;
    const auto ds = simulate("time-varying-tau", 11, so);
    const RunConfig cfg = small_config();
    const auto dir = scratch("e2e");
    const auto trained = run_train(cfg, ds, (dir / "models").string());
    ASSERT_EQ(trained.size(), 2u);
    for (const auto& s : trained) EXPECT_TRUE(s.ok) << s.method << ": " << s.message;
    const auto predicted = run_predict(cfg, ds, (dir / "models").string(), (dir / "pred").string());
    for (const auto& s : predicted) EXPECT_TRUE(s.ok) << s.method << ": " << s.message;

    for (const auto& m : cfg.methods) {
        std::ifstream in(dir / "pred" / ("predictions_" + m + ".csv"));
        ASSERT_TRUE(in) << m;
        std::string line;
        std::getline(in, line);
        std::string key;
        double prev_a = -1.0, prev_q = -1e300;
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string st, date, a, q;
            std::getline(ss, st, ',');
            std::getline(ss, date, ',');
            std::getline(ss, a, ',');
            std::getline(ss, q, ',');
            if (st + date != key) {
                key = st + date;
                prev_a = -1.0;
                prev_q = -1e300;
            }
            ASSERT_GT(std::stod(a), prev_a);
            ASSERT_GE(std::stod(q), prev_q) << m << " " << date;
            prev_a = std::stod(a);
            prev_q = std::stod(q);
        }
    }

    const auto rep = run_verify(cfg, ds, (dir / "pred").string(), (dir / "verify").string());
    ASSERT_EQ(rep.overall.size(), 2u);
    for (const auto& s : rep.overall) {
        EXPECT_EQ(s.n, 31u) << s.method;
        EXPECT_TRUE(std::isfinite(s.crps));
        EXPECT_GT(s.crps, 0.0);
        EXPECT_LT(s.crps, 5.0);
    }
    for (const char* f : {"scores.csv", "dm.csv", "pit_histogram.csv", "summary.json"}) {
        EXPECT_TRUE(fs::exists(dir / "verify" / f)) << f;
    }

    // The saved D-vine reproduces its quantiles after a JSON round trip.
    const auto mf = load_model_file((dir / "models" / "models" / "S001__GAM-DVQR-C.json").string());
    const DVineModel m = dvine_from_json(mf.model);
    const DVineModel again = dvine_from_json(Json::parse(to_json(m).dump()));
    const std::vector<double> x(m.predictor_names.size(), 0.5);
    const auto row = CovariateRow::from_doy(200);
    for (double a : {0.1, 0.5, 0.9}) {
        EXPECT_NEAR(again.predict_quantile(x, row, a), m.predict_quantile(x, row, a), 1e-12);
    }

    // Verification refuses predictions inside the training period.
    RunConfig overlap = cfg;
    overlap.test_start.reset();
    overlap.test_end.reset();
    overlap.set("train_end", "2019-12-31");
    EXPECT_THROW(run_verify(overlap, ds, (dir / "pred").string(), (dir / "verify2").string()), DomainError);
    fs::remove_all(dir);
}

TEST(Pipeline, PerfectForecastScoresZero) {
    SimulateOptions so;
    so.days = 60;
    const auto ds = simulate("gaussian-oracle", 2, so);
    const auto dir = scratch("perfect");
    {
        std::ofstream out(dir / "predictions_EMOS.csv");
        out.precision(17);
        out << "station,date,alpha,quantile\n";
        for (const auto& r : ds.records) {
            if (r.date < parse_date("2015-02-01")) continue;
            for (double a : {0.1, 0.5, 0.9}) out << r.station << ',' << format_date(r.date) << ',' << a << ',' << r.obs << '\n';
        }
    }
    RunConfig cfg;
    cfg.set("methods", "EMOS");
    cfg.set("train_start", "2015-01-01");
    cfg.set("train_end", "2015-01-31");
    cfg.set("test_start", "2015-02-01");
    cfg.set("alphas", "0.1,0.5,0.9");
    const auto rep = run_verify(cfg, ds, dir.string(), (dir / "out").string());
    ASSERT_EQ(rep.overall.size(), 1u);
    EXPECT_EQ(rep.overall[0].n, 29u);
    EXPECT_NEAR(rep.overall[0].crps, 0.0, 1e-12);
    EXPECT_NEAR(rep.overall[0].mae, 0.0, 1e-12);
    fs::remove_all(dir);
}

TEST(Cli, SimulateIsByteIdentical) {
    const auto dir = scratch("cli");
    const std::string cli = GAMDVQR_CLI_PATH;
    for (const char* sub : {"a", "b"}) {
        const std::string cmd = "\"" + cli + "\" simulate --scenario informative-subset --seed 4 --days 50 --out-dir \"" +
                                (dir / sub).string() + "\" > /dev/null";
        ASSERT_EQ(std::system(cmd.c_str()), 0) << cmd;
    }
    const auto a = slurp(dir / "a" / "informative-subset.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir / "b" / "informative-subset.csv"));
    const std::string bad = "\"" + cli + "\" train --data \"" + (dir / "missing.csv").string() + "\" > /dev/null 2>&1";
    EXPECT_NE(std::system(bad.c_str()), 0);
    fs::remove_all(dir);
}
