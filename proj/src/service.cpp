#include "qw/service.hpp"

#include <chrono>
#include <ctime>

#include <httplib.h>
#include <json.hpp>

#include "qw/error.hpp"
#include "qw/evaluation.hpp"

namespace qw {

using nlohmann::json;

NormalityModel with_normalizers(NormalityModel model, const SensorFrame& frame, const ScoreOptions& score) {
  if (!model.normalizers || model.normalizers->n_pred != score.window.length ||
      model.normalizers->epsilon != score.epsilon)
    model.normalizers = calibrate(model, frame, score);
  return model;
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
  reply(res, status, {{"error", {{"kind", kind}, {"message", message}}}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::format:
      return 400;
    case ErrorCode::conflict:
      return 409;
    case ErrorCode::not_found:
      return 404;
    default:
      return 500;
  }
}

std::size_t query_index(const httplib::Request& req, const char* key, std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || v[0] == '-') fail(ErrorCode::invalid_argument, std::string("query parameter '") + key + "' must be a non-negative integer");
  return static_cast<std::size_t>(out);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json residual_json(const SensorResiduals& r) {
  return {{"r_trans", r.r_trans}, {"r_bound", r.r_bound}, {"r_conf", r.r_conf}, {"bound_errors", r.bound_errors}};
}

}  // namespace

FeedbackService::FeedbackService(NormalityModel model, SensorFrame frame, ServiceOptions options)
    : frame_(std::move(frame)),
      options_(std::move(options)),
      history_(with_normalizers(std::move(model), frame_, options_.score), options_.history),
      server_(std::make_unique<httplib::Server>()) {
  options_.score.window.validate(history_.active()->hyper.delta);
  require(options_.cache_entries >= 1, "score cache needs at least one entry");
  routes();
}

FeedbackService::~FeedbackService() { stop(); }

const Normalizers& FeedbackService::normalizers_of(const NormalityModel& model) const { return *model.normalizers; }

FeedbackService::TablePtr FeedbackService::scores(const std::shared_ptr<const NormalityModel>& model,
                                                  std::size_t first, std::size_t last) {
  const CacheKey key{model->version, first, last};
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = index_.find(key); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
  }
  auto table = std::make_shared<const ScoreTable>(
      score_starts(*model, frame_, options_.score, normalizers_of(*model), first, last));
  std::lock_guard lock(cache_mutex_);
  if (index_.count(key)) return index_[key]->second;
  lru_.emplace_front(key, table);
  index_[key] = lru_.begin();
  while (lru_.size() > options_.cache_entries) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
  return table;
}

void FeedbackService::routes() {
  auto& svr = *server_;

  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      reply_error(res, status_for(e.code()), "error", e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "internal", e.what());
    }
  });

  svr.Get("/api/scores", [this](const httplib::Request& req, httplib::Response& res) {
    const auto model = history_.active();
    const std::size_t n = options_.score.window.length;
    const std::size_t windows = frame_.length() >= n ? frame_.length() - n + 1 : 0;
    const std::size_t from = query_index(req, "from", 0);
    const std::size_t to = std::min(query_index(req, "to", windows), windows);
    const std::size_t smoothing = query_index(req, "smoothing", 1);
    if (smoothing < 1) fail(ErrorCode::invalid_argument, "smoothing must be >= 1");
    if (from > to) fail(ErrorCode::invalid_argument, "from must not exceed to");
    // the trailing max needs the windows just before `from`
    const std::size_t stride = options_.score.window.stride;
    const std::size_t lead = std::min(from / stride, smoothing - 1) * stride;
    const auto table = scores(model, from - lead, to);

    std::vector<double> agg = table->aggregated();
    const std::vector<double> smoothed = smoothing > 1 ? smooth_max(agg, smoothing) : agg;
    std::size_t skip = 0;
    while (skip < table->window_count() && table->window_start(skip) < from) ++skip;

    json starts = json::array(), agg_out = json::array(), smooth_out = json::array();
    json sensors = json::object();
    for (const auto& name : table->sensor_names())
      sensors[name] = {{"r_trans", json::array()}, {"r_bound", json::array()}, {"r_conf", json::array()}};
    for (std::size_t k = skip; k < table->window_count(); ++k) {
      starts.push_back(table->window_start(k));
      agg_out.push_back(agg[k]);
      smooth_out.push_back(smoothed[k]);
      for (std::size_t i = 0; i < table->sensor_count(); ++i) {
        const auto& r = table->residuals(k, i);
        auto& s = sensors[table->sensor_names()[i]];
        s["r_trans"].push_back(r.r_trans);
        s["r_bound"].push_back(r.r_bound);
        s["r_conf"].push_back(r.r_conf);
      }
    }
    reply(res, 200,
          {{"version", model->version},
           {"n_pred", n},
           {"stride", stride},
           {"smoothing", smoothing},
           {"window_start", starts},
           {"aggregated", agg_out},
           {"smoothed", smooth_out},
           {"sensors", sensors}});
  });

  svr.Get(R"(/api/window/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto model = history_.active();
    const std::size_t n = options_.score.window.length;
    std::size_t start = 0;
    try {
      start = std::stoull(req.matches[1].str());
    } catch (const std::exception&) {
      fail(ErrorCode::not_found, "window start out of range");
    }
    if (frame_.length() < n || start > frame_.length() - n)
      fail(ErrorCode::not_found, "no full window starts at " + std::to_string(start));
    const auto table = scores(model, start, start + 1);
    const ResidualReport rep = table->report(0);
    json sensors = json::array();
    for (std::size_t i = 0; i < rep.sensors.size(); ++i) {
      json s = residual_json(rep.sensors[i]);
      s["name"] = model->sensor_names[i];
      s["score"] = sensor_score(rep.sensors[i], *model->normalizers, i);
      s["bound_max"] = model->normalizers->bound_max[i];
      s["conf_max"] = model->normalizers->conf_max[i];
      const auto col = frame_.column(i);
      s["values"] = std::vector<double>(col.begin() + static_cast<std::ptrdiff_t>(start),
                                        col.begin() + static_cast<std::ptrdiff_t>(start + n));
      sensors.push_back(std::move(s));
    }
    json body = {{"version", model->version},
                 {"window_start", start},
                 {"n_pred", n},
                 {"aggregated", rep.aggregated},
                 {"sensors", sensors}};
    const auto& ts = frame_.timestamps();
    body["timestamps"] = std::vector<double>(ts.begin() + static_cast<std::ptrdiff_t>(start),
                                             ts.begin() + static_cast<std::ptrdiff_t>(start + n));
    if (frame_.has_labels()) {
      const auto lab = frame_.labels();
      body["labels"] = std::vector<int>(lab.begin() + static_cast<std::ptrdiff_t>(start),
                                        lab.begin() + static_cast<std::ptrdiff_t>(start + n));
    }
    reply(res, 200, body);
  });

  svr.Post("/api/feedback", [this](const httplib::Request& req, httplib::Response& res) {
    FeedbackEvent event;
    try {
      event = event_from_json(req.body);
      if (event.submitted_at.empty()) event.submitted_at = utc_now();
    } catch (const Error& e) {
      return reply_error(res, 400, "malformed", e.what());
    }
    const auto delta = static_cast<std::size_t>(history_.active()->hyper.delta);
    if (event.window.end > frame_.length() || event.window.size() <= delta)
      return reply_error(res, 422, "invalid_window",
                         "feedback window [" + std::to_string(event.window.begin) + ", " +
                             std::to_string(event.window.end) + ") must lie in the frame and be longer than delta = " +
                             std::to_string(delta));
    try {
      const std::uint64_t v = history_.apply(frame_, event);
      reply(res, 200, {{"new_version", v}, {"active_version", v}});
    } catch (const Error& e) {
      if (e.code() == ErrorCode::conflict) return reply_error(res, 409, "stale_version", e.what());
      if (e.code() == ErrorCode::invalid_argument) return reply_error(res, 400, "malformed", e.what());
      throw;
    }
  });

  svr.Post("/api/rollback", [this](const httplib::Request& req, httplib::Response& res) {
    std::uint64_t version = 0;
    try {
      version = json::parse(req.body).at("version").get<std::uint64_t>();
    } catch (const json::exception& e) {
      return reply_error(res, 400, "malformed", std::string("rollback body needs {\"version\": N}: ") + e.what());
    }
    reply(res, 200, {{"active_version", history_.rollback(version)}});
  });

  svr.Get("/api/model", [this](const httplib::Request&, httplib::Response& res) {
    const auto model = history_.active();
    const auto& h = model->hyper;
    json hyper = {{"n_q", h.n_levels}, {"delta", h.delta}, {"eta", h.eta}, {"bounds", to_string(h.bounds)},
                  {"scaler", to_string(h.scaler)}, {"epsilon", options_.score.epsilon},
                  {"n_pred", options_.score.window.length}, {"stride", options_.score.window.stride}};
    hyper["n_w"] = h.n_clusters ? json(*h.n_clusters) : json(nullptr);
    json versions = json::array();
    for (const auto& v : history_.versions()) {
      json j = {{"version", v.version}, {"description", v.description}};
      j["parent"] = v.parent ? json(*v.parent) : json(nullptr);
      versions.push_back(std::move(j));
    }
    json sensors = json::array();
    for (std::size_t i = 0; i < model->sensor_count(); ++i) {
      const auto& sn = model->sensors[i];
      sensors.push_back({{"name", model->sensor_names[i]},
                         {"np1", sn.transitions.size()},
                         {"np2", sn.bounds.size()},
                         {"np3", sn.representative_count()}});
    }
    reply(res, 200,
          {{"active_version", model->version},
           {"hyper", hyper},
           {"train_range", {model->train_range.begin, model->train_range.end}},
           {"frame_length", frame_.length()},
           {"versions", versions},
           {"sensors", sensors}});
  });

  if (!options_.static_dir.empty() && !svr.set_mount_point("/", options_.static_dir))
    fail(ErrorCode::io, "static directory '" + options_.static_dir + "' does not exist");
}

int FeedbackService::bind() {
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.host);
  } else if (!server_->bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port < 0) fail(ErrorCode::io, "cannot listen on " + options_.host + ":" + std::to_string(options_.port));
  bound_ = true;
  return port;
}

void FeedbackService::run() {
  if (!bound_) fail(ErrorCode::runtime, "service is not bound");
  server_->listen_after_bind();
}

int FeedbackService::start() {
  const int port = bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void FeedbackService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace qw
