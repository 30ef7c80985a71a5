#include "qwatch/qwatch.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>

#include <json.hpp>

#include "qw/error.hpp"
#include "qw/evaluation.hpp"
#include "qw/incremental.hpp"
#include "qw/model_io.hpp"
#include "qw/normality_model.hpp"
#include "qw/residuals.hpp"
#include "qw/service.hpp"
#include "qw/simulators.hpp"

struct qw_frame {
  qw::SensorFrame frame;
};
struct qw_model {
  qw::NormalityModel model;
};
struct qw_scores {
  qw::ScoreTable table;
  qw::Normalizers normalizers;
};
struct qw_service {
  std::unique_ptr<qw::FeedbackService> service;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

qw_status to_status(qw::ErrorCode code) {
  switch (code) {
    case qw::ErrorCode::invalid_argument: return QW_ERR_INVALID_ARGUMENT;
    case qw::ErrorCode::io: return QW_ERR_IO;
    case qw::ErrorCode::format: return QW_ERR_FORMAT;
    case qw::ErrorCode::version_mismatch: return QW_ERR_VERSION_MISMATCH;
    case qw::ErrorCode::runtime: return QW_ERR_RUNTIME;
    case qw::ErrorCode::conflict: return QW_ERR_CONFLICT;
    case qw::ErrorCode::not_found: return QW_ERR_NOT_FOUND;
  }
  return QW_ERR_INTERNAL;
}

template <typename F>
qw_status guard(F&& fn) {
  g_last_error.clear();
  try {
    fn();
    return QW_OK;
  } catch (const qw::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return QW_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QW_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return QW_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) qw::fail(qw::ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) qw::fail(qw::ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// intervals recorded by the generators next to the CSV
std::vector<qw::Interval> sidecar_intervals(const std::string& path, std::size_t length) {
  const std::string meta = path + ".meta.json";
  if (!std::filesystem::exists(meta)) return {};
  std::vector<qw::Interval> out;
  try {
    const json j = json::parse(read_text(meta));
    if (!j.contains("intervals")) return {};
    for (const auto& iv : j.at("intervals"))
      out.push_back({iv.at("begin").get<std::size_t>(), iv.at("end").get<std::size_t>(), iv.at("tag").get<std::string>()});
  } catch (const json::exception& e) {
    qw::fail(qw::ErrorCode::format, "bad metadata file '" + meta + "': " + e.what());
  }
  for (const auto& iv : out)
    if (iv.end > length) qw::fail(qw::ErrorCode::format, "metadata intervals of '" + meta + "' exceed the data");
  return out;
}

qw::IndexRange train_range(const qw::SensorFrame& f, std::size_t begin, std::size_t end) {
  if (end != 0) return {begin, end};
  for (const auto& iv : f.intervals())
    if (iv.tag == "normal") return {iv.begin, iv.end};
  if (f.has_labels()) {
    const auto lab = f.labels();
    std::size_t e = 0;
    while (e < lab.size() && lab[e] == 0) ++e;
    if (e == 0) qw::fail(qw::ErrorCode::invalid_argument, "frame starts with an anomalous label; pass a training range");
    return {0, e};
  }
  return {0, f.length()};
}

qw::ScoreOptions score_options(const qw_score_options* o) {
  qw_score_options d;
  qw_score_options_init(&d);
  if (!o) o = &d;
  qw::ScoreOptions s;
  s.window.length = o->n_pred;
  s.window.stride = o->stride;
  s.epsilon = o->epsilon;
  s.rtrans_norm = qw::transition_norm_from_string(o->rtrans_norm ? o->rtrans_norm : "per_window");
  s.jobs = o->jobs;
  return s;
}

qw::MetricOptions metric_options(const qw_eval_options* o) {
  qw::MetricOptions m;
  if (!o) return m;
  if (o->smoothing) m.smoothing.assign(o->smoothing, o->smoothing + o->smoothing_count);
  m.max_fpr = o->max_fpr;
  m.pauc_scale = o->pauc_raw ? qw::PaucScale::raw : qw::PaucScale::mcclish;
  return m;
}

qw_frame* trace_frame(const qw::Simulation& sim) {
  return new qw_frame{qw::SensorFrame(sim.trace_names, sim.frame.timestamps(), sim.trace)};
}

json model_json(const qw::NormalityModel& m) {
  const auto& h = m.hyper;
  json hyper = {{"n_q", h.n_levels}, {"delta", h.delta}, {"eta", h.eta}, {"bounds", qw::to_string(h.bounds)},
                {"bounds_percentile", h.bounds_percentile}, {"scaler", qw::to_string(h.scaler)}};
  hyper["n_w"] = h.n_clusters ? json(*h.n_clusters) : json(nullptr);
  json sensors = json::array();
  for (std::size_t i = 0; i < m.sensor_count(); ++i) {
    const auto& sn = m.sensors[i];
    sensors.push_back({{"name", m.sensor_names[i]},
                       {"np1", sn.transitions.size()},
                       {"np2", sn.bounds.size()},
                       {"np3", sn.representative_count()}});
  }
  json out = {{"version", m.version},
              {"hyper", hyper},
              {"train_range", {m.train_range.begin, m.train_range.end}},
              {"sensors", sensors},
              {"np3_scalars", qw::np3_scalar_count(m)}};
  out["np3_scalar_bound"] = h.n_clusters ? json(qw::np3_scalar_bound(m)) : json(nullptr);
  if (m.normalizers)
    out["normalizers"] = {{"n_pred", m.normalizers->n_pred},
                          {"epsilon", m.normalizers->epsilon},
                          {"bound_max", m.normalizers->bound_max},
                          {"conf_max", m.normalizers->conf_max}};
  else
    out["normalizers"] = nullptr;
  return out;
}

}  // namespace

extern "C" {

const char* qw_last_error(void) { return g_last_error.c_str(); }

const char* qw_status_name(qw_status status) {
  switch (status) {
    case QW_OK: return "ok";
    case QW_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case QW_ERR_IO: return "io";
    case QW_ERR_FORMAT: return "format";
    case QW_ERR_VERSION_MISMATCH: return "version_mismatch";
    case QW_ERR_RUNTIME: return "runtime";
    case QW_ERR_CONFLICT: return "conflict";
    case QW_ERR_NOT_FOUND: return "not_found";
    case QW_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* qw_version_string(void) { return "0.1.0"; }

void qw_string_free(char* s) { std::free(s); }

qw_status qw_frame_create(size_t sensor_count, const char* const* names, size_t length, const double* timestamps,
                          const double* values, const int* labels, qw_frame** out) {
  return guard([&] {
    need(out, "out");
    need(names, "names");
    need(timestamps, "timestamps");
    need(values, "values");
    std::vector<std::string> n;
    std::vector<std::vector<double>> cols;
    for (size_t s = 0; s < sensor_count; ++s) {
      need(names[s], "sensor name");
      n.emplace_back(names[s]);
      cols.emplace_back(values + s * length, values + (s + 1) * length);
    }
    std::optional<std::vector<int>> lab;
    if (labels) lab.emplace(labels, labels + length);
    *out = new qw_frame{qw::SensorFrame(std::move(n), std::vector<double>(timestamps, timestamps + length),
                                        std::move(cols), std::move(lab))};
  });
}

qw_status qw_frame_load_csv(const char* path, const char* const* sensors, size_t sensor_count, qw_frame** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    qw::CsvSchema schema;
    if (sensors)
      for (size_t i = 0; i < sensor_count; ++i) schema.sensors.emplace_back(sensors[i]);
    qw::SensorFrame f = qw::load_csv(path, schema);
    auto intervals = sidecar_intervals(path, f.length());
    if (!intervals.empty()) f = f.with_intervals(std::move(intervals));
    *out = new qw_frame{std::move(f)};
  });
}

qw_status qw_frame_save_csv(const qw_frame* frame, const char* path) {
  return guard([&] {
    need(frame, "frame");
    need(path, "path");
    qw::save_csv(frame->frame, path);
  });
}

size_t qw_frame_length(const qw_frame* frame) { return frame ? frame->frame.length() : 0; }
size_t qw_frame_sensor_count(const qw_frame* frame) { return frame ? frame->frame.sensor_count() : 0; }

qw_status qw_frame_column(const qw_frame* frame, size_t sensor, const double** data) {
  return guard([&] {
    need(frame, "frame");
    need(data, "data");
    if (sensor >= frame->frame.sensor_count()) qw::fail(qw::ErrorCode::invalid_argument, "sensor index out of range");
    *data = frame->frame.column(sensor).data();
  });
}

qw_status qw_frame_labels(const qw_frame* frame, const int** data) {
  return guard([&] {
    need(frame, "frame");
    need(data, "data");
    if (!frame->frame.has_labels()) qw::fail(qw::ErrorCode::not_found, "frame has no labels");
    *data = frame->frame.labels().data();
  });
}

qw_status qw_frame_describe(const qw_frame* frame, char** out) {
  return guard([&] {
    need(frame, "frame");
    need(out, "out");
    const auto& f = frame->frame;
    json iv = json::array();
    for (const auto& i : f.intervals()) iv.push_back({{"begin", i.begin}, {"end", i.end}, {"tag", i.tag}});
    *out = dup_string(json{{"length", f.length()}, {"sensors", f.sensor_names()}, {"labeled", f.has_labels()},
                           {"intervals", iv}}
                          .dump());
  });
}

void qw_frame_free(qw_frame* frame) { delete frame; }

void qw_lorentz_options_init(qw_lorentz_options* o) {
  if (!o) return;
  const qw::LorentzConfig d;
  *o = {d.seed, d.steps_per_interval, d.burn_in, d.dt};
}

void qw_etc_options_init(qw_etc_options* o) {
  if (!o) return;
  const qw::EtcConfig d;
  *o = {d.seed, d.run_seconds, d.tau, d.substeps};
}

qw_status qw_generate_lorentz(const qw_lorentz_options* options, qw_frame** frame, char** metadata, qw_frame** trace) {
  return guard([&] {
    need(frame, "frame");
    qw_lorentz_options o;
    qw_lorentz_options_init(&o);
    if (options) o = *options;
    qw::LorentzConfig c;
    c.seed = o.seed;
    c.steps_per_interval = o.steps_per_interval;
    c.burn_in = o.burn_in;
    c.dt = o.dt;
    qw::Simulation sim = qw::generate_lorentz(c);
    std::unique_ptr<qw_frame> tr(trace ? trace_frame(sim) : nullptr);
    char* meta = metadata ? dup_string(sim.metadata_json) : nullptr;
    *frame = new qw_frame{std::move(sim.frame)};
    if (metadata) *metadata = meta;
    if (trace) *trace = tr.release();
  });
}

qw_status qw_generate_etc(const qw_etc_options* options, qw_frame** frame, char** metadata, qw_frame** trace) {
  return guard([&] {
    need(frame, "frame");
    qw_etc_options o;
    qw_etc_options_init(&o);
    if (options) o = *options;
    qw::EtcConfig c;
    c.seed = o.seed;
    c.run_seconds = o.run_seconds;
    c.tau = o.tau;
    c.substeps = o.substeps;
    qw::Simulation sim = qw::generate_etc(c);
    std::unique_ptr<qw_frame> tr(trace ? trace_frame(sim) : nullptr);
    char* meta = metadata ? dup_string(sim.metadata_json) : nullptr;
    *frame = new qw_frame{std::move(sim.frame)};
    if (metadata) *metadata = meta;
    if (trace) *trace = tr.release();
  });
}

void qw_fit_options_init(qw_fit_options* o) {
  if (!o) return;
  const qw::HyperParams h;
  *o = {h.n_levels, h.delta, h.eta, 0, "minmax", h.bounds_percentile, "standard", 0, 0, 100, 1.0, 0};
}

qw_status qw_model_fit(const qw_frame* frame, const qw_fit_options* options, qw_model** out) {
  return guard([&] {
    need(frame, "frame");
    need(out, "out");
    qw_fit_options o;
    qw_fit_options_init(&o);
    if (options) o = *options;
    qw::HyperParams h;
    h.n_levels = o.n_q;
    h.delta = o.delta;
    h.eta = o.eta;
    if (o.n_w < 0) qw::fail(qw::ErrorCode::invalid_argument, "n_w must be >= 1 (0 disables K-Means)");
    if (o.n_w > 0) h.n_clusters = o.n_w;
    h.bounds = qw::bounds_mode_from_string(o.bounds ? o.bounds : "minmax");
    h.bounds_percentile = o.bounds_percentile;
    h.scaler = qw::scaler_kind_from_string(o.scaler ? o.scaler : "standard");
    h.validate();
    const qw::IndexRange range = train_range(frame->frame, o.train_begin, o.train_end);
    qw::NormalityModel m = qw::fit(frame->frame, range, h);
    qw::ScoreOptions s;
    s.window.length = o.n_pred;
    s.epsilon = o.epsilon;
    s.jobs = o.jobs;
    m.normalizers = qw::calibrate(m, frame->frame, s);
    *out = new qw_model{std::move(m)};
  });
}

qw_status qw_model_load(const char* path, qw_model** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new qw_model{qw::load_model(path)};
  });
}

qw_status qw_model_save(const qw_model* model, const char* path) {
  return guard([&] {
    need(model, "model");
    need(path, "path");
    qw::save_model(model->model, path);
  });
}

qw_status qw_model_version(const qw_model* model, uint64_t* version) {
  return guard([&] {
    need(model, "model");
    need(version, "version");
    *version = model->model.version;
  });
}

qw_status qw_model_describe(const qw_model* model, char** out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    *out = dup_string(model_json(model->model).dump(1));
  });
}

void qw_model_free(qw_model* model) { delete model; }

void qw_score_options_init(qw_score_options* o) {
  if (!o) return;
  *o = {100, 1, 1.0, "per_window", 0};
}

qw_status qw_score(const qw_model* model, const qw_frame* frame, const qw_score_options* options, qw_scores** out) {
  return guard([&] {
    need(model, "model");
    need(frame, "frame");
    need(out, "out");
    const qw::ScoreOptions s = score_options(options);
    const qw::NormalityModel m = qw::with_normalizers(model->model, frame->frame, s);
    auto table = qw::score_frame(m, frame->frame, s, *m.normalizers);
    *out = new qw_scores{std::move(table), *m.normalizers};
  });
}

size_t qw_scores_window_count(const qw_scores* scores) { return scores ? scores->table.window_count() : 0; }

qw_status qw_scores_window(const qw_scores* scores, size_t k, size_t* start, double* aggregated) {
  return guard([&] {
    need(scores, "scores");
    if (k >= scores->table.window_count()) qw::fail(qw::ErrorCode::invalid_argument, "window index out of range");
    if (start) *start = scores->table.window_start(k);
    if (aggregated) *aggregated = scores->table.aggregated(k);
  });
}

qw_status qw_scores_residuals(const qw_scores* scores, size_t k, size_t sensor, double* r_trans, double* r_bound,
                              double* r_conf) {
  return guard([&] {
    need(scores, "scores");
    if (k >= scores->table.window_count() || sensor >= scores->table.sensor_count())
      qw::fail(qw::ErrorCode::invalid_argument, "window or sensor index out of range");
    const auto& r = scores->table.residuals(k, sensor);
    if (r_trans) *r_trans = r.r_trans;
    if (r_bound) *r_bound = r.r_bound;
    if (r_conf) *r_conf = r.r_conf;
  });
}

qw_status qw_scores_per_timestamp(const qw_scores* scores, size_t length, double* out) {
  return guard([&] {
    need(scores, "scores");
    need(out, "out");
    const auto v = qw::per_timestamp_scores(scores->table, length);
    std::copy(v.begin(), v.end(), out);
  });
}

qw_status qw_scores_save_csv(const qw_scores* scores, const char* path) {
  return guard([&] {
    need(scores, "scores");
    need(path, "path");
    qw::save_scores_csv(scores->table, scores->normalizers, path);
  });
}

void qw_scores_free(qw_scores* scores) { delete scores; }

qw_status qw_feedback_apply(const qw_model* model, const qw_frame* frame, const char* event_json, qw_model** out) {
  return guard([&] {
    need(model, "model");
    need(frame, "frame");
    need(event_json, "event_json");
    need(out, "out");
    const qw::FeedbackEvent e = qw::event_from_json(event_json);
    *out = new qw_model{qw::apply_feedback(model->model, frame->frame, e)};
  });
}

qw_status qw_feedback_apply_file(const qw_model* model, const qw_frame* frame, const char* path,
                                 const char* journal_path, const char* snapshot_dir, qw_model** out) {
  return guard([&] {
    need(model, "model");
    need(frame, "frame");
    need(path, "path");
    need(out, "out");
    const std::string text = read_text(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) qw::fail(qw::ErrorCode::format, "'" + std::string(path) + "' is empty");

    bool journal = false;
    if (text[first] == '{') {
      const auto eol = text.find('\n', first);
      try {
        journal = json::parse(text.substr(first, eol == std::string::npos ? std::string::npos : eol - first))
                      .contains("type");
      } catch (const json::exception&) {
        journal = false;  // a multi-line single event
      }
    }
    if (journal) {
      const auto records = qw::read_journal(path);
      *out = new qw_model{qw::replay_journal(model->model, frame->frame, records)};
      return;
    }

    std::vector<qw::FeedbackEvent> events;
    try {
      const json j = json::parse(text);
      if (j.is_array()) {
        for (const auto& e : j) events.push_back(qw::event_from_json(e.dump()));
      } else {
        events.push_back(qw::event_from_json(j.dump()));
      }
    } catch (const json::exception& e) {
      qw::fail(qw::ErrorCode::format, "malformed feedback file '" + std::string(path) + "': " + e.what());
    }
    qw::ModelHistory history(model->model, {journal_path ? journal_path : "", snapshot_dir ? snapshot_dir : ""});
    for (const auto& e : events) history.apply(frame->frame, e);
    *out = new qw_model{*history.active()};
  });
}

void qw_eval_options_init(qw_eval_options* o) {
  if (!o) return;
  *o = {nullptr, 0, 0.1, 0};
}

qw_status qw_metrics(const double* scores, const int* labels, size_t n, double max_fpr, double* roc_auc, double* pauc,
                     double* f1, double* f1_threshold) {
  return guard([&] {
    need(scores, "scores");
    need(labels, "labels");
    const std::span<const double> s(scores, n);
    const std::span<const int> l(labels, n);
    if (roc_auc) *roc_auc = qw::roc_auc(s, l);
    if (pauc) *pauc = qw::partial_auc(s, l, max_fpr);
    if (f1 || f1_threshold) {
      const auto r = qw::best_f1(s, l);
      if (f1) *f1 = r.f1;
      if (f1_threshold) *f1_threshold = r.threshold;
    }
  });
}

qw_status qw_evaluate(const qw_scores* scores, const qw_frame* frame, const qw_eval_options* options,
                      char** metrics_csv) {
  return guard([&] {
    need(scores, "scores");
    need(frame, "frame");
    need(metrics_csv, "metrics_csv");
    if (!frame->frame.has_labels()) qw::fail(qw::ErrorCode::invalid_argument, "evaluation needs a labeled frame");
    const auto ts = qw::per_timestamp_scores(scores->table, frame->frame.length());
    *metrics_csv =
        dup_string(qw::format_metrics_csv(qw::evaluate_scores(ts, frame->frame.labels(), metric_options(options))));
  });
}

qw_status qw_evaluate_file(const char* scores_path, const char* source, size_t n_pred, const qw_frame* frame,
                           const qw_eval_options* options, char** metrics_csv) {
  return guard([&] {
    need(scores_path, "scores_path");
    need(frame, "frame");
    need(metrics_csv, "metrics_csv");
    if (!frame->frame.has_labels()) qw::fail(qw::ErrorCode::invalid_argument, "evaluation needs a labeled frame");
    const auto ts = qw::load_timestamp_scores(scores_path, n_pred, frame->frame.length());
    *metrics_csv = dup_string(qw::format_metrics_csv(
        qw::evaluate_scores(ts, frame->frame.labels(), metric_options(options), source ? source : "external")));
  });
}

void qw_sweep_options_init(qw_sweep_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof *o);
  o->max_fpr = 0.1;
}

qw_status qw_sweep(const qw_frame* frame, const qw_sweep_options* options, char** results_csv, char** summary) {
  return guard([&] {
    need(frame, "frame");
    qw_sweep_options o;
    qw_sweep_options_init(&o);
    if (options) o = *options;
    qw::SweepGrid g;
    if (o.n_q) g.n_levels.assign(o.n_q, o.n_q + o.n_q_count);
    if (o.delta) g.deltas.assign(o.delta, o.delta + o.delta_count);
    if (o.eta) g.etas.assign(o.eta, o.eta + o.eta_count);
    if (o.epsilon) g.epsilons.assign(o.epsilon, o.epsilon + o.epsilon_count);
    if (o.n_w) {
      g.n_clusters.clear();
      for (size_t i = 0; i < o.n_w_count; ++i)
        g.n_clusters.push_back(o.n_w[i] > 0 ? std::optional<int>(o.n_w[i]) : std::nullopt);
    }
    if (o.n_pred) g.n_pred.assign(o.n_pred, o.n_pred + o.n_pred_count);
    const auto points = qw::expand_grid(g, qw::HyperParams{});
    qw::MetricOptions m;
    m.max_fpr = o.max_fpr;
    const auto rows = qw::sweep(frame->frame, train_range(frame->frame, o.train_begin, o.train_end), points, m, o.jobs);
    char* csv = results_csv ? dup_string(qw::format_sweep_csv(rows)) : nullptr;
    if (summary) *summary = dup_string(qw::format_sweep_summary(rows));
    if (results_csv) *results_csv = csv;
  });
}

void qw_serve_options_init(qw_serve_options* o) {
  if (!o) return;
  *o = {"127.0.0.1", 8080, nullptr, nullptr, nullptr, 100, 1, 1.0, 16};
}

qw_status qw_service_create(const qw_model* model, const qw_frame* frame, const qw_serve_options* options,
                            qw_service** out) {
  return guard([&] {
    need(model, "model");
    need(frame, "frame");
    need(out, "out");
    qw_serve_options o;
    qw_serve_options_init(&o);
    if (options) o = *options;
    qw::ServiceOptions s;
    s.host = o.host ? o.host : "127.0.0.1";
    s.port = o.port;
    s.static_dir = o.static_dir ? o.static_dir : "";
    s.history.journal_path = o.journal_path ? o.journal_path : "";
    s.history.snapshot_dir = o.snapshot_dir ? o.snapshot_dir : "";
    s.score.window.length = o.n_pred;
    s.score.window.stride = o.stride;
    s.score.epsilon = o.epsilon;
    s.cache_entries = o.cache_entries;
    *out = new qw_service{std::make_unique<qw::FeedbackService>(model->model, frame->frame, s)};
  });
}

qw_status qw_service_bind(qw_service* service, int* port) {
  return guard([&] {
    need(service, "service");
    const int p = service->service->bind();
    if (port) *port = p;
  });
}

qw_status qw_service_run(qw_service* service) {
  return guard([&] {
    need(service, "service");
    service->service->run();
  });
}

qw_status qw_service_start(qw_service* service, int* port) {
  return guard([&] {
    need(service, "service");
    const int p = service->service->start();
    if (port) *port = p;
  });
}

void qw_service_stop(qw_service* service) {
  if (service) service->service->stop();
}

void qw_service_free(qw_service* service) { delete service; }

}  // extern "C"
