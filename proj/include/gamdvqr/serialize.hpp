#pragma once
// JSON persistence of fitted models. Doubles are written in shortest
// round-trip form, so save/load reproduces every coefficient bit-exactly.

#include <string>
#include <vector>

#include <json.hpp>

#include "gamdvqr/dataset.hpp"
#include "gamdvqr/dvine.hpp"
#include "gamdvqr/emos.hpp"

namespace gamdvqr {

using Json = nlohmann::json;

Json to_json(const MarginModel& m);
MarginModel margin_from_json(const Json& j);
Json to_json(const CopulaSpec& s);
CopulaSpec copula_spec_from_json(const Json& j);
Json to_json(const DVineModel& m);
DVineModel dvine_from_json(const Json& j);
Json to_json(const EmosModel& m);
EmosModel emos_from_json(const Json& j);

// Training rows kept by the rolling-window DVQR, which refits per forecast day.
struct WindowTrainingSet {
    std::vector<std::string> predictor_names;
    std::vector<Date> dates;
    std::vector<double> y;
    std::vector<std::vector<double>> x;  // per case, aligned with predictor_names
    int window_n = 25;
    int window_k = 4;
};
Json to_json(const WindowTrainingSet& w);
WindowTrainingSet window_from_json(const Json& j);

// Model file envelope: {"format", "method", "station", "config_hash", "model"}.
struct ModelFile {
    std::string method;
    std::string station;
    std::string config_hash;
    Json model;
};
void save_model_file(const std::string& path, const ModelFile& f);
ModelFile load_model_file(const std::string& path);

}  // namespace gamdvqr
