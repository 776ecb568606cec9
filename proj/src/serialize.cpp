#include "gamdvqr/serialize.hpp"

#include <fstream>

#include "gamdvqr/stats.hpp"

namespace gamdvqr {

namespace {
constexpr const char* kFormat = "gamdvqr-model-1";
}

Json to_json(const MarginModel& m) {
    Json j;
    j["n_obs"] = m.n_obs;
    j["loglik"] = m.loglik;
    j["bic"] = m.bic;
    if (m.kind == MarginKind::KDE) {
        j["kind"] = "KDE";
        j["bandwidth"] = m.bandwidth;
        j["samples"] = m.kde_samples;
        return j;
    }
    j["kind"] = "Parametric";
    j["family"] = family_name(m.family);
    j["transform"] = transform_name(m.transform);
    j["mu_coef"] = m.mu_coef;
    j["sigma_coef"] = m.sigma_coef;
    j["nu"] = m.nu;
    j["phi"] = m.phi;
    j["boundary_n"] = m.boundary_n;
    return j;
}

MarginModel margin_from_json(const Json& j) {
    MarginModel m;
    m.n_obs = j.at("n_obs").get<std::size_t>();
    m.loglik = j.at("loglik").get<double>();
    m.bic = j.at("bic").get<double>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "KDE") {
        m.kind = MarginKind::KDE;
        m.bandwidth = j.at("bandwidth").get<double>();
        m.kde_samples = j.at("samples").get<std::vector<double>>();
        if (!(m.bandwidth > 0.0) || m.kde_samples.empty()) throw DomainError("model file: invalid KDE margin");
        m.build_kde_cache();
        return m;
    }
    if (kind != "Parametric") throw DomainError("model file: unknown margin kind " + kind);
    m.family = parse_margin_family(j.at("family").get<std::string>());
    m.transform = parse_transform(j.at("transform").get<std::string>());
    m.mu_coef = j.at("mu_coef").get<std::array<double, 3>>();
    m.sigma_coef = j.at("sigma_coef").get<std::array<double, 3>>();
    m.nu = j.at("nu").get<double>();
    m.phi = j.at("phi").get<double>();
    m.boundary_n = j.at("boundary_n").get<std::size_t>();
    return m;
}

Json to_json(const CopulaSpec& s) {
    Json j;
    j["family"] = kind_name(s.family.kind);
    j["rotation"] = static_cast<int>(s.family.rotation);
    j["df"] = s.family.df;
    j["design"] = design_name(s.tau_model.kind);
    j["coefficients"] = s.tau_model.coefficients;
    j["lambda"] = s.tau_model.penalty;
    j["spline"] = {{"n_basis", s.tau_model.spline.n_basis},
                   {"start", s.tau_model.spline.start},
                   {"period", s.tau_model.spline.period}};
    j["loglik"] = s.loglik;
    j["n_params"] = s.n_params;
    j["bic"] = s.bic;
    j["n_obs"] = s.n_obs;
    j["fit_failed"] = s.fit_failed;
    return j;
}

CopulaSpec copula_spec_from_json(const Json& j) {
    CopulaSpec s;
    const auto kind = j.at("family").get<std::string>();
    bool found = false;
    for (auto k : {CopulaKind::Independence, CopulaKind::Gaussian, CopulaKind::StudentT, CopulaKind::Clayton,
                   CopulaKind::Gumbel, CopulaKind::Frank}) {
        if (kind_name(k) == kind) {
            s.family.kind = k;
            found = true;
        }
    }
    if (!found) throw DomainError("model file: unknown copula family " + kind);
    const int rot = j.at("rotation").get<int>();
    if (rot != 0 && rot != 90 && rot != 180 && rot != 270) throw DomainError("model file: invalid rotation");
    s.family.rotation = static_cast<Rotation>(rot);
    s.family.df = j.at("df").get<double>();
    s.family.validate();
    s.tau_model.kind = parse_design(j.at("design").get<std::string>());
    s.tau_model.coefficients = j.at("coefficients").get<std::vector<double>>();
    s.tau_model.penalty = j.at("lambda").get<double>();
    const Json& sp = j.at("spline");
    s.tau_model.spline = {sp.at("n_basis").get<int>(), sp.at("start").get<double>(), sp.at("period").get<double>()};
    s.tau_model.validate();
    s.loglik = j.at("loglik").get<double>();
    s.n_params = j.at("n_params").get<double>();
    s.bic = j.at("bic").get<double>();
    s.n_obs = j.at("n_obs").get<std::size_t>();
    s.fit_failed = j.at("fit_failed").get<bool>();
    return s;
}

Json to_json(const DVineModel& m) {
    Json j;
    j["response_margin"] = to_json(m.response_margin);
    j["predictor_names"] = m.predictor_names;
    j["order"] = m.order;
    Json margins = Json::array();
    for (const auto& pm : m.predictor_margins) margins.push_back(to_json(pm));
    j["predictor_margins"] = margins;
    Json trees = Json::array();
    for (const auto& tree : m.trees) {
        Json t = Json::array();
        for (const auto& e : tree) t.push_back(to_json(e));
        trees.push_back(t);
    }
    j["trees"] = trees;
    j["design"] = design_name(m.design);
    j["cll"] = m.cll;
    j["cll_scale"] = "copula";
    j["bic"] = m.bic;
    j["n_obs"] = m.n_obs;
    j["config_hash"] = m.config_hash;
    j["diagnostics"] = m.diagnostics;
    return j;
}

DVineModel dvine_from_json(const Json& j) {
    DVineModel m;
    m.response_margin = margin_from_json(j.at("response_margin"));
    m.predictor_names = j.at("predictor_names").get<std::vector<std::string>>();
    m.order = j.at("order").get<std::vector<std::size_t>>();
    for (const auto& pm : j.at("predictor_margins")) m.predictor_margins.push_back(margin_from_json(pm));
    for (const auto& t : j.at("trees")) {
        std::vector<CopulaSpec> tree;
        for (const auto& e : t) tree.push_back(copula_spec_from_json(e));
        m.trees.push_back(std::move(tree));
    }
    m.design = parse_design(j.at("design").get<std::string>());
    m.cll = j.at("cll").get<double>();
    m.bic = j.at("bic").get<double>();
    m.n_obs = j.at("n_obs").get<std::size_t>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();

    const std::size_t k = m.order.size();
    if (m.predictor_margins.size() != k || m.trees.size() != k) throw DomainError("model file: inconsistent vine depth");
    for (std::size_t t = 0; t < k; ++t) {
        if (m.trees[t].size() != k - t) throw DomainError("model file: malformed tree " + std::to_string(t + 1));
    }
    for (std::size_t idx : m.order) {
        if (idx >= m.predictor_names.size()) throw DomainError("model file: predictor index out of range");
    }
    return m;
}

Json to_json(const EmosModel& m) {
    return Json{{"names", m.names},           {"mu_coef", m.mu_coef},   {"sigma_coef", m.sigma_coef},
                {"center", m.center},         {"scale", m.scale},       {"loss", loss_name(m.loss)},
                {"boosted", m.boosted},       {"train_loss", m.train_loss}, {"iterations", m.iterations},
                {"converged", m.converged},   {"message", m.message}};
}

EmosModel emos_from_json(const Json& j) {
    EmosModel m;
    m.names = j.at("names").get<std::vector<std::string>>();
    m.mu_coef = j.at("mu_coef").get<std::vector<double>>();
    m.sigma_coef = j.at("sigma_coef").get<std::vector<double>>();
    m.center = j.at("center").get<std::vector<double>>();
    m.scale = j.at("scale").get<std::vector<double>>();
    m.loss = parse_loss(j.at("loss").get<std::string>());
    m.boosted = j.at("boosted").get<bool>();
    m.train_loss = j.at("train_loss").get<double>();
    m.iterations = j.at("iterations").get<int>();
    m.converged = j.at("converged").get<bool>();
    m.message = j.at("message").get<std::string>();
    const std::size_t p = m.names.size();
    if (m.mu_coef.size() != p + 1 || m.sigma_coef.size() != p + 1 || m.center.size() != p || m.scale.size() != p) {
        throw DomainError("model file: inconsistent EMOS dimensions");
    }
    return m;
}

Json to_json(const WindowTrainingSet& w) {
    std::vector<std::string> dates;
    for (const auto& d : w.dates) dates.push_back(format_date(d));
    return Json{{"predictor_names", w.predictor_names}, {"dates", dates}, {"y", w.y},
                {"x", w.x},   {"window_n", w.window_n},   {"window_k", w.window_k}};
}

WindowTrainingSet window_from_json(const Json& j) {
    WindowTrainingSet w;
    w.predictor_names = j.at("predictor_names").get<std::vector<std::string>>();
    for (const auto& d : j.at("dates")) w.dates.push_back(parse_date(d.get<std::string>()));
    w.y = j.at("y").get<std::vector<double>>();
    w.x = j.at("x").get<std::vector<std::vector<double>>>();
    w.window_n = j.at("window_n").get<int>();
    w.window_k = j.at("window_k").get<int>();
    if (w.dates.size() != w.y.size() || w.x.size() != w.y.size()) throw DomainError("model file: ragged training set");
    return w;
}

void save_model_file(const std::string& path, const ModelFile& f) {
    const Json j{{"format", kFormat},
                 {"method", f.method},
                 {"station", f.station},
                 {"config_hash", f.config_hash},
                 {"model", f.model}};
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write " + path);
    out << j.dump(1) << '\n';
}

ModelFile load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw DomainError(path + ": " + e.what());
    }
    if (j.value("format", "") != kFormat) throw DomainError(path + ": unsupported model format");
    ModelFile f;
    f.method = j.at("method").get<std::string>();
    f.station = j.at("station").get<std::string>();
    f.config_hash = j.at("config_hash").get<std::string>();
    f.model = j.at("model");
    return f;
}

}  // namespace gamdvqr
