#include "qw/incremental.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "qw/correlation.hpp"
#include "qw/error.hpp"
#include "qw/model_io.hpp"

namespace qw {

using nlohmann::json;

void FeedbackEvent::validate(int delta) const {
  require(window.size() > static_cast<std::size_t>(delta),
          "feedback window of " + std::to_string(window.size()) +
              " samples must be longer than delta = " + std::to_string(delta));
  if (verdict == Verdict::anomalous) {
    require(zeta.has_value(), "anomalous feedback needs a correlation tolerance zeta");
    require(*zeta > 0.0 && *zeta < 1.0, "zeta must satisfy ζ ∈ ]0,1[ (got " + format_double(*zeta) + ")");
  } else {
    require(!zeta.has_value(), "zeta only applies to anomalous feedback");
  }
}

namespace {

void check_window(const NormalityModel& model, const SensorFrame& frame, IndexRange window) {
  require(frame.sensor_names() == model.sensor_names, "frame sensors do not match the model");
  require(window.end <= frame.length(), "feedback window exceeds the frame");
  require(window.size() > static_cast<std::size_t>(model.hyper.delta),
          "feedback window of " + std::to_string(window.size()) + " samples must be longer than delta = " +
              std::to_string(model.hyper.delta));
}

std::vector<ConfigurationVector> finish_representatives(const NormalityModel& model,
                                                        std::vector<ConfigurationVector> reps) {
  if (model.hyper.n_clusters) return kmeans_reduce(reps, *model.hyper.n_clusters);
  return reps;
}

}  // namespace

NormalityModel il_increase(const NormalityModel& model, const SensorFrame& frame, IndexRange window) {
  check_window(model, frame, window);
  const SensorFrame scaled = apply_scaler(frame, model.scaler);
  NormalityModel out = model;
  out.version = model.version + 1;
  const auto& h = model.hyper;
  for (std::size_t i = 0; i < model.sensor_count(); ++i) {
    SensorNormality& sn = out.sensors[i];
    auto obs = observe_sensor(scaled, i, model.quantizers[i], window, h.delta);
    sn.transitions.insert(obs.transitions.begin(), obs.transitions.end());
    for (const auto& [c, configs] : obs.configurations) {
      const Bounds fresh = compute_bounds(configs, h.bounds, h.bounds_percentile);
      auto filtered = select_representatives(configs, h.eta);
      auto b = sn.bounds.find(c);
      if (b == sn.bounds.end()) {
        sn.bounds[c] = fresh;
      } else {
        for (std::size_t j = 0; j < fresh.lower.size(); ++j) {
          b->second.lower[j] = std::min(b->second.lower[j], fresh.lower[j]);
          b->second.upper[j] = std::max(b->second.upper[j], fresh.upper[j]);
        }
      }
      auto& reps = sn.representatives[c];
      if (reps.empty()) {
        reps = finish_representatives(model, std::move(filtered));
      } else {
        std::vector<ConfigurationVector> merged = reps;
        merged.insert(merged.end(), filtered.begin(), filtered.end());
        reps = finish_representatives(model, select_representatives(merged, h.eta));
      }
    }
  }
  return out;
}

NormalityModel il_reduce(const NormalityModel& model, const SensorFrame& frame, IndexRange window,
                         double zeta, ReduceAgainst against) {
  check_window(model, frame, window);
  require(zeta > 0.0 && zeta < 1.0, "zeta must satisfy ζ ∈ ]0,1[ (got " + format_double(zeta) + ")");
  const SensorFrame scaled = apply_scaler(frame, model.scaler);
  NormalityModel out = model;
  out.version = model.version + 1;
  const auto& h = model.hyper;
  for (std::size_t i = 0; i < model.sensor_count(); ++i) {
    SensorNormality& sn = out.sensors[i];
    const auto obs = observe_sensor(scaled, i, model.quantizers[i], window, h.delta);
    for (const auto& [c, configs] : obs.configurations) {
      auto reps_it = sn.representatives.find(c);
      if (reps_it == sn.representatives.end() || reps_it->second.empty()) continue;
      const auto reference = against == ReduceAgainst::filtered ? select_representatives(configs, h.eta) : configs;
      std::vector<CorrelationProbe> probes;
      probes.reserve(reference.size());
      for (const auto& w : reference) probes.emplace_back(w.values);

      std::vector<ConfigurationVector> survivors;
      for (const auto& rep : reps_it->second) {
        const CorrelationProbe p(rep.values);
        double best = 0.0;
        for (const auto& q : probes) best = std::max(best, p.abs_corr(q));
        if (best < zeta) survivors.push_back(rep);
      }
      if (survivors.size() == reps_it->second.size()) continue;
      if (survivors.empty()) {
        sn.representatives.erase(reps_it);
        sn.bounds.erase(c);
        sn.transitions.erase(c);
      } else {
        sn.bounds[c] = compute_bounds(survivors, h.bounds, h.bounds_percentile);
        reps_it->second = std::move(survivors);
      }
    }
  }
  return out;
}

NormalityModel apply_feedback(const NormalityModel& model, const SensorFrame& frame, const FeedbackEvent& event) {
  event.validate(model.hyper.delta);
  if (event.verdict == Verdict::normal) return il_increase(model, frame, event.window);
  return il_reduce(model, frame, event.window, *event.zeta);
}

std::string to_string(Verdict verdict) { return verdict == Verdict::normal ? "normal" : "anomalous"; }

Verdict verdict_from_string(const std::string& text) {
  if (text == "normal") return Verdict::normal;
  if (text == "anomalous") return Verdict::anomalous;
  fail(ErrorCode::invalid_argument, "unknown verdict '" + text + "' (expected normal|anomalous)");
}

namespace {

json event_json(const FeedbackEvent& e) {
  json j = {{"window", {e.window.begin, e.window.end}},
            {"verdict", to_string(e.verdict)},
            {"note", e.note},
            {"submitted_at", e.submitted_at}};
  j["zeta"] = e.zeta ? json(*e.zeta) : json(nullptr);
  j["base_version"] = e.base_version ? json(*e.base_version) : json(nullptr);
  return j;
}

FeedbackEvent event_from(const json& j) {
  FeedbackEvent e;
  const auto& w = j.at("window");
  if (w.is_array()) {
    e.window = {w.at(0).get<std::size_t>(), w.at(1).get<std::size_t>()};
  } else {
    e.window = {w.at("start").get<std::size_t>(), w.at("end").get<std::size_t>()};
  }
  e.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  if (j.contains("zeta") && !j["zeta"].is_null()) e.zeta = j["zeta"].get<double>();
  if (e.verdict == Verdict::anomalous && !e.zeta) e.zeta = kDefaultZeta;
  e.note = j.value("note", "");
  e.submitted_at = j.value("submitted_at", "");
  if (j.contains("base_version") && !j["base_version"].is_null())
    e.base_version = j["base_version"].get<std::uint64_t>();
  return e;
}

}  // namespace

std::string event_to_json(const FeedbackEvent& event) { return event_json(event).dump(); }

FeedbackEvent event_from_json(const std::string& text) {
  try {
    return event_from(json::parse(text));
  } catch (const json::exception& e) {
    fail(ErrorCode::format, std::string("malformed feedback event: ") + e.what());
  }
}

std::string journal_line(const JournalRecord& record) {
  json j;
  if (record.kind == JournalRecord::Kind::feedback) {
    j["type"] = "feedback";
    j["event"] = event_json(record.event);
  } else {
    j["type"] = "rollback";
  }
  j["base_version"] = record.base_version;
  j["resulting_version"] = record.resulting_version;
  return j.dump();
}

std::vector<JournalRecord> read_journal(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open journal '" + path + "'");
  std::vector<JournalRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      JournalRecord r;
      const auto type = j.at("type").get<std::string>();
      if (type == "feedback") {
        r.kind = JournalRecord::Kind::feedback;
        r.event = event_from(j.at("event"));
      } else if (type == "rollback") {
        r.kind = JournalRecord::Kind::rollback;
      } else {
        fail(ErrorCode::format, "unknown journal record type '" + type + "'");
      }
      r.base_version = j.at("base_version").get<std::uint64_t>();
      r.resulting_version = j.at("resulting_version").get<std::uint64_t>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      fail(ErrorCode::format, "journal line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

ModelHistory::ModelHistory(NormalityModel initial, Options options) : options_(std::move(options)) {
  auto m = std::make_shared<const NormalityModel>(std::move(initial));
  max_version_ = m->version;
  history_.push_back({m->version, std::nullopt, "initial"});
  models_[m->version] = m;
  active_ = std::move(m);
  if (!options_.snapshot_dir.empty()) std::filesystem::create_directories(options_.snapshot_dir);
}

std::shared_ptr<const NormalityModel> ModelHistory::active() const {
  std::lock_guard lock(mutex_);
  return active_;
}

std::uint64_t ModelHistory::active_version() const {
  std::lock_guard lock(mutex_);
  return active_->version;
}

std::vector<VersionInfo> ModelHistory::versions() const {
  std::lock_guard lock(mutex_);
  return history_;
}

void ModelHistory::persist_snapshot(const NormalityModel& model) const {
  if (options_.snapshot_dir.empty()) return;
  const auto path = std::filesystem::path(options_.snapshot_dir) / ("model-v" + std::to_string(model.version) + ".json");
  if (!std::filesystem::exists(path)) save_model(model, path.string());
}

void ModelHistory::append_journal(const JournalRecord& record) const {
  if (options_.journal_path.empty()) return;
  std::ofstream out(options_.journal_path, std::ios::binary | std::ios::app);
  if (!out) fail(ErrorCode::io, "cannot append to journal '" + options_.journal_path + "'");
  out << journal_line(record) << '\n';
  if (!out) fail(ErrorCode::io, "journal write failed");
}

std::uint64_t ModelHistory::apply(const SensorFrame& frame, const FeedbackEvent& event) {
  std::lock_guard lock(mutex_);
  const auto base = active_;
  if (event.base_version && *event.base_version != base->version)
    fail(ErrorCode::conflict, "feedback targets version " + std::to_string(*event.base_version) +
                                  " but version " + std::to_string(base->version) + " is active");
  NormalityModel next = apply_feedback(*base, frame, event);
  next.version = max_version_ + 1;
  persist_snapshot(*base);
  persist_snapshot(next);

  JournalRecord rec;
  rec.kind = JournalRecord::Kind::feedback;
  rec.event = event;
  rec.base_version = base->version;
  rec.resulting_version = next.version;
  append_journal(rec);

  auto ptr = std::make_shared<const NormalityModel>(std::move(next));
  max_version_ = ptr->version;
  history_.push_back({ptr->version, base->version,
                      to_string(event.verdict) + " [" + std::to_string(event.window.begin) + ", " +
                          std::to_string(event.window.end) + ")"});
  models_[ptr->version] = ptr;
  active_ = std::move(ptr);
  return active_->version;
}

std::uint64_t ModelHistory::rollback(std::uint64_t version) {
  std::lock_guard lock(mutex_);
  auto it = models_.find(version);
  if (it == models_.end() && !options_.snapshot_dir.empty()) {
    const auto path = std::filesystem::path(options_.snapshot_dir) / ("model-v" + std::to_string(version) + ".json");
    if (std::filesystem::exists(path))
      it = models_.emplace(version, std::make_shared<const NormalityModel>(load_model(path.string()))).first;
  }
  if (it == models_.end()) fail(ErrorCode::not_found, "unknown model version " + std::to_string(version));
  JournalRecord rec;
  rec.kind = JournalRecord::Kind::rollback;
  rec.base_version = active_->version;
  rec.resulting_version = version;
  append_journal(rec);
  active_ = it->second;
  return version;
}

NormalityModel replay_journal(const NormalityModel& initial, const SensorFrame& frame,
                              const std::vector<JournalRecord>& records) {
  ModelHistory history(initial);
  for (const auto& r : records) {
    if (history.active_version() != r.base_version)
      fail(ErrorCode::format, "journal expects version " + std::to_string(r.base_version) + " to be active, found " +
                                  std::to_string(history.active_version()));
    std::uint64_t v = 0;
    if (r.kind == JournalRecord::Kind::feedback) {
      FeedbackEvent e = r.event;
      e.base_version.reset();
      v = history.apply(frame, e);
    } else {
      v = history.rollback(r.resulting_version);
    }
    if (v != r.resulting_version)
      fail(ErrorCode::format, "journal replay produced version " + std::to_string(v) + ", journal recorded " +
                                  std::to_string(r.resulting_version));
  }
  return *history.active();
}

}  // namespace qw
