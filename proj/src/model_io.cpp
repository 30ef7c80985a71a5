#include "qw/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qw/error.hpp"

namespace qw {

using nlohmann::json;

namespace {

json transition_json(const Transition& c) { return json::array({c.from, c.to}); }

Transition transition_from(const json& j) {
  if (!j.is_array() || j.size() != 2) fail(ErrorCode::format, "transition must be a [from, to] pair");
  return {j[0].get<int>(), j[1].get<int>()};
}

json hyper_json(const HyperParams& h) {
  json j = {{"n_q", h.n_levels},
            {"delta", h.delta},
            {"eta", h.eta},
            {"bounds", to_string(h.bounds)},
            {"bounds_percentile", h.bounds_percentile},
            {"scaler", to_string(h.scaler)},
            {"quantile_estimator", "linear"}};
  j["n_w"] = h.n_clusters ? json(*h.n_clusters) : json(nullptr);
  return j;
}

HyperParams hyper_from(const json& j) {
  HyperParams h;
  h.n_levels = j.at("n_q").get<int>();
  h.delta = j.at("delta").get<int>();
  h.eta = j.at("eta").get<double>();
  if (!j.at("n_w").is_null()) h.n_clusters = j.at("n_w").get<int>();
  h.bounds = bounds_mode_from_string(j.at("bounds").get<std::string>());
  h.bounds_percentile = j.at("bounds_percentile").get<double>();
  h.scaler = scaler_kind_from_string(j.at("scaler").get<std::string>());
  return h;
}

json sensor_json(const SensorNormality& sn) {
  json transitions = json::array();
  for (const auto& c : sn.transitions) transitions.push_back(transition_json(c));
  json bounds = json::array();
  for (const auto& [c, b] : sn.bounds)
    bounds.push_back({{"transition", transition_json(c)}, {"lower", b.lower}, {"upper", b.upper}});
  json reps = json::array();
  for (const auto& [c, ws] : sn.representatives) {
    json vectors = json::array();
    json stamps = json::array();
    for (const auto& w : ws) {
      vectors.push_back(w.values);
      stamps.push_back(w.timestamp == kNoTimestamp ? json(nullptr) : json(w.timestamp));
    }
    reps.push_back({{"transition", transition_json(c)}, {"vectors", vectors}, {"timestamps", stamps}});
  }
  return {{"np1", transitions}, {"np2", bounds}, {"np3", reps}};
}

SensorNormality sensor_from(const json& j, std::size_t sensor) {
  SensorNormality sn;
  for (const auto& c : j.at("np1")) sn.transitions.insert(transition_from(c));
  for (const auto& b : j.at("np2"))
    sn.bounds[transition_from(b.at("transition"))] = {b.at("lower").get<std::vector<double>>(),
                                                      b.at("upper").get<std::vector<double>>()};
  for (const auto& r : j.at("np3")) {
    const auto& vectors = r.at("vectors");
    const auto& stamps = r.at("timestamps");
    if (vectors.size() != stamps.size()) fail(ErrorCode::format, "np3 vectors/timestamps length mismatch");
    std::vector<ConfigurationVector> ws;
    for (std::size_t k = 0; k < vectors.size(); ++k)
      ws.push_back({vectors[k].get<std::vector<double>>(), sensor,
                    stamps[k].is_null() ? kNoTimestamp : stamps[k].get<std::size_t>()});
    sn.representatives[transition_from(r.at("transition"))] = std::move(ws);
  }
  return sn;
}

}  // namespace

std::string serialize_model(const NormalityModel& model) {
  json j;
  j["format"] = "qwatch-normality-model";
  j["schema_version"] = kModelSchemaVersion;
  j["version"] = model.version;
  j["hyper"] = hyper_json(model.hyper);
  j["train_range"] = {model.train_range.begin, model.train_range.end};
  j["scaler"] = {{"kind", to_string(model.scaler.kind())},
                 {"center", model.scaler.center()},
                 {"spread", model.scaler.spread()}};
  json sensors = json::array();
  for (std::size_t i = 0; i < model.sensor_count(); ++i) {
    json s = sensor_json(model.sensors[i]);
    s["name"] = model.sensor_names[i];
    s["cut_points"] = model.quantizers[i].cut_points();
    sensors.push_back(std::move(s));
  }
  j["sensors"] = std::move(sensors);
  if (model.normalizers) {
    const auto& n = *model.normalizers;
    j["normalizers"] = {{"n_pred", n.n_pred},
                        {"epsilon", n.epsilon},
                        {"bound_max", n.bound_max},
                        {"conf_max", n.conf_max}};
  } else {
    j["normalizers"] = nullptr;
  }
  return j.dump(1) + "\n";
}

NormalityModel deserialize_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::format, std::string("model snapshot is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "qwatch-normality-model")
      fail(ErrorCode::format, "not a normality model snapshot");
    const int schema = j.at("schema_version").get<int>();
    if (schema != kModelSchemaVersion)
      fail(ErrorCode::version_mismatch, "unsupported model schema version " + std::to_string(schema) +
                                            " (this build reads version " +
                                            std::to_string(kModelSchemaVersion) + ")");
    NormalityModel m;
    m.version = j.at("version").get<std::uint64_t>();
    m.hyper = hyper_from(j.at("hyper"));
    m.train_range = {j.at("train_range").at(0).get<std::size_t>(),
                     j.at("train_range").at(1).get<std::size_t>()};
    for (const auto& s : j.at("sensors")) {
      const std::size_t i = m.sensor_names.size();
      m.sensor_names.push_back(s.at("name").get<std::string>());
      m.quantizers.emplace_back(s.at("cut_points").get<std::vector<double>>());
      m.sensors.push_back(sensor_from(s, i));
    }
    const auto& sc = j.at("scaler");
    m.scaler = Scaler(scaler_kind_from_string(sc.at("kind").get<std::string>()), m.sensor_names,
                      sc.at("center").get<std::vector<double>>(),
                      sc.at("spread").get<std::vector<double>>());
    if (!j.at("normalizers").is_null()) {
      const auto& n = j.at("normalizers");
      m.normalizers = Normalizers{n.at("n_pred").get<std::size_t>(), n.at("epsilon").get<double>(),
                                  n.at("bound_max").get<std::vector<double>>(),
                                  n.at("conf_max").get<std::vector<double>>()};
    }
    m.hyper.validate();
    for (const auto& q : m.quantizers)
      if (q.n_levels() != m.hyper.n_levels) fail(ErrorCode::format, "cut point count does not match n_q");
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::format, std::string("corrupt model snapshot: ") + e.what());
  }
}

void save_model(const NormalityModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
  out << serialize_model(model);
  if (!out) fail(ErrorCode::io, "write to '" + path + "' failed");
}

NormalityModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace qw
