#include "gamdvqr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

#include "gamdvqr/stats.hpp"

namespace gamdvqr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\"");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "NaN" || s == "nan"; }

double parse_number(const std::string& s, std::size_t line, const std::string& column) {
    if (is_missing(s)) return kNaN;
    std::size_t pos = 0;
    double v = kNaN;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size()) {
        throw DomainError("line " + std::to_string(line) + ": malformed number '" + s + "' in column " + column);
    }
    return v;
}

// Column roles in the header.
struct ColumnMap {
    int station = -1, date = -1, obs = -1;
    std::vector<int> mean, sd;
    std::vector<std::vector<int>> members;  // per variable, ordered by member index
};

std::string fmt(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest form that reads back exactly
    return std::string(buf, res.ptr);
}

}  // namespace

Date parse_date(const std::string& s) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
        throw DomainError("malformed date '" + s + "' (expected YYYY-MM-DD)");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw DomainError("invalid calendar date '" + s + "'");
    return Date{ymd};
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

int day_of_year(Date d) {
    const std::chrono::year_month_day ymd{d};
    const Date jan1{ymd.year() / std::chrono::January / 1};
    return static_cast<int>((d - jan1).count()) + 1;
}

double wind_speed(double u, double v) { return std::sqrt(u * u + v * v); }

double relative_humidity(double d2m, double t2m) {
    return std::exp(17.625 * d2m / (243.04 + d2m)) / std::exp(17.625 * t2m / (243.04 + t2m));
}

std::pair<double, double> ensemble_summary(const std::vector<double>& members) {
    if (members.size() < 2) throw DomainError("ensemble summary needs at least two members");
    return {mean(members), sample_sd(members)};
}

int ForecastDataset::variable_index(const std::string& v) const {
    const auto it = std::find(variables.begin(), variables.end(), v);
    return it == variables.end() ? -1 : static_cast<int>(it - variables.begin());
}

bool ForecastDataset::has_predictor(const std::string& name) const {
    if (name == "sin" || name == "cos" || name == "doy") return true;
    const auto us = name.rfind('_');
    if (us == std::string::npos) return false;
    const std::string suffix = name.substr(us + 1);
    return (suffix == "mean" || suffix == "sd") && variable_index(name.substr(0, us)) >= 0;
}

double ForecastDataset::value(const ForecastRecord& r, const std::string& name) const {
    if (name == "sin") return r.covariates().u_sin;
    if (name == "cos") return r.covariates().u_cos;
    if (name == "doy") return day_of_year(r.date);
    const auto us = name.rfind('_');
    const int vi = us == std::string::npos ? -1 : variable_index(name.substr(0, us));
    if (vi < 0) throw DomainError("unknown predictor " + name);
    const std::string suffix = name.substr(us + 1);
    if (suffix == "mean") return r.mean[static_cast<std::size_t>(vi)];
    if (suffix == "sd") return r.sd[static_cast<std::size_t>(vi)];
    throw DomainError("unknown predictor " + name);
}

std::map<std::string, std::vector<std::size_t>> ForecastDataset::by_station() const {
    std::map<std::string, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < records.size(); ++i) out[records[i].station].push_back(i);
    for (auto& [s, idx] : out) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return records[a].date < records[b].date;
        });
    }
    return out;
}

std::size_t ForecastDataset::member_count() const {
    std::size_t m = 0;
    for (const auto& r : records) {
        for (const auto& mem : r.members) m = std::max(m, mem.size());
    }
    return m;
}

ForecastDataset parse_csv(std::istream& in, const std::string& source) {
    ForecastDataset ds;
    std::string line;
    if (!std::getline(in, line)) throw DomainError(source + ": empty file");
    const auto header = split_csv(line);

    ColumnMap cm;
    const std::regex mean_re("(.+)_mean"), sd_re("(.+)_sd"), ens_re("(.+)_ens_([0-9]+)");
    std::vector<std::vector<std::pair<int, int>>> member_cols;  // (member index, column)
    auto var_slot = [&](const std::string& v) {
        int vi = ds.variable_index(v);
        if (vi < 0) {
            ds.variables.push_back(v);
            cm.mean.push_back(-1);
            cm.sd.push_back(-1);
            member_cols.emplace_back();
            vi = static_cast<int>(ds.variables.size()) - 1;
        }
        return static_cast<std::size_t>(vi);
    };
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& h = header[c];
        const int ci = static_cast<int>(c);
        std::smatch m;
        if (h == "station") {
            cm.station = ci;
        } else if (h == "date") {
            cm.date = ci;
        } else if (h == "obs") {
            cm.obs = ci;
        } else if (std::regex_match(h, m, ens_re)) {
            member_cols[var_slot(m[1])].push_back({std::stoi(m[2]), ci});
        } else if (std::regex_match(h, m, mean_re)) {
            cm.mean[var_slot(m[1])] = ci;
        } else if (std::regex_match(h, m, sd_re)) {
            cm.sd[var_slot(m[1])] = ci;
        } else {
            ds.report.notes.push_back("ignored column " + h);
        }
    }
    if (cm.station < 0 || cm.date < 0 || cm.obs < 0) {
        throw DomainError(source + ": header must contain station, date and obs columns");
    }
    for (std::size_t v = 0; v < ds.variables.size(); ++v) {
        auto& mc = member_cols[v];
        std::sort(mc.begin(), mc.end());
        std::vector<int> cols;
        for (const auto& [k, c] : mc) cols.push_back(c);
        cm.members.push_back(cols);
        if (cm.mean[v] < 0 && cols.size() < 2) {
            throw DomainError(source + ": variable " + ds.variables[v] + " needs a mean column or >= 2 members");
        }
        if (cm.sd[v] < 0 && cols.size() < 2) {
            throw DomainError(source + ": variable " + ds.variables[v] + " needs an sd column or >= 2 members");
        }
    }

    std::set<std::pair<std::string, Date>> seen;
    std::set<std::string> stations;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            throw DomainError(source + ": line " + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
        }
        ForecastRecord r;
        r.station = f[static_cast<std::size_t>(cm.station)];
        if (r.station.empty()) throw DomainError(source + ": line " + std::to_string(lineno) + ": empty station");
        try {
            r.date = parse_date(f[static_cast<std::size_t>(cm.date)]);
        } catch (const DomainError& e) {
            throw DomainError(source + ": line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!seen.insert({r.station, r.date}).second) {
            throw DomainError(source + ": line " + std::to_string(lineno) + ": duplicate (station, date) " + r.station +
                              " " + format_date(r.date));
        }
        stations.insert(r.station);
        r.obs = parse_number(f[static_cast<std::size_t>(cm.obs)], lineno, "obs");
        if (std::isnan(r.obs)) {
            r.obs_missing = true;
            ++ds.report.missing_obs;
        }
        const std::size_t nv = ds.variables.size();
        r.mean.assign(nv, kNaN);
        r.sd.assign(nv, kNaN);
        r.members.resize(nv);
        for (std::size_t v = 0; v < nv; ++v) {
            for (int c : cm.members[v]) {
                const double x = parse_number(f[static_cast<std::size_t>(c)], lineno, header[static_cast<std::size_t>(c)]);
                if (std::isnan(x)) {
                    ++ds.report.missing_values;
                } else {
                    r.members[v].push_back(x);
                }
            }
            const bool can_summarize = r.members[v].size() >= 2;
            if (cm.mean[v] >= 0) {
                r.mean[v] = parse_number(f[static_cast<std::size_t>(cm.mean[v])], lineno, ds.variables[v] + "_mean");
            }
            if (cm.sd[v] >= 0) {
                r.sd[v] = parse_number(f[static_cast<std::size_t>(cm.sd[v])], lineno, ds.variables[v] + "_sd");
                if (r.sd[v] < 0.0) {
                    throw DomainError(source + ": line " + std::to_string(lineno) + ": negative " + ds.variables[v] +
                                      "_sd");
                }
            }
            if (can_summarize) {
                const auto [mu, sd] = ensemble_summary(r.members[v]);
                if (std::isnan(r.mean[v])) r.mean[v] = mu;
                if (std::isnan(r.sd[v])) r.sd[v] = sd;
            }
            if (std::isnan(r.mean[v])) ++ds.report.missing_values;
            if (std::isnan(r.sd[v])) ++ds.report.missing_values;
        }
        ds.records.push_back(std::move(r));
    }
    ds.report.rows = ds.records.size();
    ds.report.stations = stations.size();
    return ds;
}

ForecastDataset ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path);
    return parse_csv(in, path);
}

void write_csv(const ForecastDataset& ds, std::ostream& out) {
    const std::size_t nv = ds.variables.size();
    std::vector<std::size_t> m(nv, 0);
    for (const auto& r : ds.records) {
        for (std::size_t v = 0; v < nv; ++v) m[v] = std::max(m[v], r.members[v].size());
    }
    out << "station,date,obs";
    for (std::size_t v = 0; v < nv; ++v) {
        out << ',' << ds.variables[v] << "_mean," << ds.variables[v] << "_sd";
        for (std::size_t k = 0; k < m[v]; ++k) out << ',' << ds.variables[v] << "_ens_" << k + 1;
    }
    out << '\n';
    for (const auto& r : ds.records) {
        out << r.station << ',' << format_date(r.date) << ',' << (r.obs_missing ? "NA" : fmt(r.obs));
        for (std::size_t v = 0; v < nv; ++v) {
            out << ',' << fmt(r.mean[v]) << ',' << fmt(r.sd[v]);
            for (std::size_t k = 0; k < m[v]; ++k) out << ',' << (k < r.members[v].size() ? fmt(r.members[v][k]) : "NA");
        }
        out << '\n';
    }
}

void derive_variables(ForecastDataset& ds) {
    auto derive = [&](const std::string& target, const std::string& a, const std::string& b,
                      double (*fn)(double, double)) {
        const int ia = ds.variable_index(a), ib = ds.variable_index(b);
        if (ds.variable_index(target) >= 0 || ia < 0 || ib < 0) return;
        ds.variables.push_back(target);
        std::size_t from_means = 0;
        for (auto& r : ds.records) {
            const auto& ma = r.members[static_cast<std::size_t>(ia)];
            const auto& mb = r.members[static_cast<std::size_t>(ib)];
            std::vector<double> mem;
            if (ma.size() == mb.size() && ma.size() >= 2) {
                for (std::size_t k = 0; k < ma.size(); ++k) mem.push_back(fn(ma[k], mb[k]));
            }
            if (!mem.empty()) {
                const auto [mu, sd] = ensemble_summary(mem);
                r.mean.push_back(mu);
                r.sd.push_back(sd);
            } else {
                r.mean.push_back(fn(r.mean[static_cast<std::size_t>(ia)], r.mean[static_cast<std::size_t>(ib)]));
                r.sd.push_back(kNaN);
                ++from_means;
            }
            r.members.push_back(std::move(mem));
        }
        if (from_means > 0) {
            ds.report.notes.push_back(target + " derived from ensemble means on " + std::to_string(from_means) +
                                      " rows without members; its sd is missing there");
        }
    };
    derive("ws10m", "u10m", "v10m", &wind_speed);
    derive("r2m", "d2m", "t2m", &relative_humidity);
}

std::vector<std::size_t> rolling_window(const std::vector<Date>& dates, Date target, int n, int k) {
    if (n < 0 || k < 0) throw DomainError("rolling_window: n and k must be nonnegative");
    using std::chrono::days;
    std::vector<std::pair<Date, Date>> ranges;
    ranges.push_back({target - days{n}, target - days{1}});
    const std::chrono::year_month_day t{target};
    for (int y = 1; y <= k; ++y) {
        std::chrono::year_month_day anchor{t.year() - std::chrono::years{y}, t.month(), t.day()};
        if (!anchor.ok()) anchor = anchor.year() / anchor.month() / std::chrono::last;
        const Date a{anchor};
        ranges.push_back({a - days{n}, a + days{n}});
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < dates.size(); ++i) {
        for (const auto& [lo, hi] : ranges) {
            if (dates[i] >= lo && dates[i] <= hi) {
                out.push_back(i);
                break;
            }
        }
    }
    return out;
}

}  // namespace gamdvqr
