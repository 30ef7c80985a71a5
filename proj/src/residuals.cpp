#include "qw/residuals.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include "qw/correlation.hpp"
#include "qw/error.hpp"
#include "qw/parallel.hpp"

namespace qw {

void WindowSpec::validate(int delta) const {
  require(length > static_cast<std::size_t>(delta),
          "window length n_pred must exceed delta (n_pred=" + std::to_string(length) +
              ", delta=" + std::to_string(delta) + ")");
  require(stride >= 1, "window stride must be >= 1");
}

ScoreTable::ScoreTable(std::vector<std::string> sensor_names, std::size_t n_pred)
    : names_(std::move(sensor_names)), n_pred_(n_pred) {}

ResidualReport ScoreTable::report(std::size_t k) const {
  ResidualReport r;
  r.window_start = starts_.at(k);
  r.sensors.assign(residuals_.begin() + static_cast<std::ptrdiff_t>(k * names_.size()),
                   residuals_.begin() + static_cast<std::ptrdiff_t>((k + 1) * names_.size()));
  r.aggregated = aggregated_[k];
  return r;
}

void ScoreTable::append(std::size_t start, std::span<const SensorResiduals> sensors, double aggregated) {
  require(sensors.size() == names_.size(), "residual count does not match sensors");
  starts_.push_back(start);
  residuals_.insert(residuals_.end(), sensors.begin(), sensors.end());
  aggregated_.push_back(aggregated);
}

double interval_distance(double xi, double lo, double hi, double epsilon) {
  require(lo <= hi, "interval lower bound exceeds upper bound");
  require(epsilon >= 0.0, "epsilon must be >= 0");
  const double excess = std::max(0.0, lo - xi) + std::max(0.0, xi - hi);
  if (excess == 0.0) return 0.0;
  const double width = hi - lo + epsilon;
  if (!(width > 0.0))
    fail(ErrorCode::runtime, "degenerate interval [" + format_double(lo) + ", " + format_double(hi) +
                                 "] with epsilon = 0: distance undefined");
  return excess / width;
}

namespace {

/// Per-sensor lookup tables keyed by from * n_q + to.
struct SensorIndex {
  std::vector<char> known;
  std::vector<const Bounds*> bounds;
  std::vector<std::vector<CorrelationProbe>> probes;
};

SensorIndex build_index(const NormalityModel& model, std::size_t sensor) {
  const auto nq = static_cast<std::size_t>(model.hyper.n_levels);
  const auto& sn = model.sensors.at(sensor);
  SensorIndex idx;
  idx.known.assign(nq * nq, 0);
  idx.bounds.assign(nq * nq, nullptr);
  idx.probes.resize(nq * nq);
  auto key = [nq](const Transition& c) { return static_cast<std::size_t>(c.from) * nq + c.to; };
  for (const auto& c : sn.transitions) idx.known[key(c)] = 1;
  for (const auto& [c, b] : sn.bounds) idx.bounds[key(c)] = &b;
  for (const auto& [c, reps] : sn.representatives)
    for (const auto& w : reps) idx.probes[key(c)].emplace_back(w.values);
  return idx;
}

}  // namespace

SensorTrace trace_sensor(const NormalityModel& model, const SensorFrame& scaled, std::size_t sensor,
                         IndexRange timestamps, double epsilon) {
  require(sensor < model.sensor_count(), "sensor index out of range");
  require(scaled.sensor_names() == model.sensor_names, "frame sensors do not match the model");
  require(timestamps.end <= scaled.length(), "trace range exceeds the frame");
  require(epsilon >= 0.0, "epsilon must be >= 0");
  const auto d = static_cast<std::size_t>(model.hyper.delta);
  const auto nq = model.hyper.n_levels;
  const std::size_t dim = model.config_length();
  const SensorIndex idx = build_index(model, sensor);
  const Quantizer& quantizer = model.quantizers[sensor];
  const auto column = scaled.column(sensor);

  SensorTrace tr;
  tr.begin = timestamps.begin;
  const std::size_t n = timestamps.size();
  tr.kind.assign(n, StepKind::none);
  tr.key.assign(n, -1);
  tr.box_distance.assign(n, 0.0);
  tr.max_corr.assign(n, 0.0);
  tr.bound_errors.assign(n, 0);

  std::vector<double> w;
  w.reserve(dim);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = timestamps.begin + k;
    if (t + d >= scaled.length()) continue;
    const int key = quantizer.level(column[t]) * nq + quantizer.level(column[t + d]);
    tr.key[k] = key;
    if (!idx.known[static_cast<std::size_t>(key)]) {
      tr.kind[k] = StepKind::novel;
      continue;
    }
    const Bounds* box = idx.bounds[static_cast<std::size_t>(key)];
    const auto& probes = idx.probes[static_cast<std::size_t>(key)];
    if (t + 1 < d || box == nullptr || probes.empty()) {
      tr.kind[k] = StepKind::unprofiled;
      continue;
    }
    tr.kind[k] = StepKind::profiled;
    w.clear();
    for (std::size_t j = t + 1 - d; j < t; ++j) w.push_back(column[j]);
    for (std::size_t i = 0; i < scaled.sensor_count(); ++i) w.push_back(scaled.value(i, t));

    double dist = 0.0;
    std::uint32_t errors = 0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double lo = box->lower[j];
      const double hi = box->upper[j];
      const double excess = std::max(0.0, lo - w[j]) + std::max(0.0, w[j] - hi);
      if (excess == 0.0) continue;
      const double width = hi - lo + epsilon;
      if (!(width > 0.0)) {
        ++errors;
        continue;
      }
      dist += excess / width;
    }
    tr.box_distance[k] = dist / static_cast<double>(dim);
    tr.bound_errors[k] = errors;

    const CorrelationProbe probe(w);
    double best = 0.0;
    for (const auto& r : probes) best = std::max(best, probe.abs_corr(r));
    tr.max_corr[k] = best;
  }
  return tr;
}

SensorResiduals window_residuals(const NormalityModel& model, const SensorTrace& trace,
                                 std::size_t start, std::size_t n_pred, TransitionNorm norm) {
  const auto d = static_cast<std::size_t>(model.hyper.delta);
  require(n_pred > d, "window length n_pred must exceed delta");
  require(start >= trace.begin && start + n_pred - d <= trace.end(), "window not covered by trace");

  SensorResiduals r;
  std::size_t novel = 0;
  double bound_sum = 0.0;
  // Per-transition (sum of max correlations, count), kept in first-visit order.
  std::vector<std::pair<int, std::pair<double, std::size_t>>> groups;
  for (std::size_t t = start; t < start + n_pred - d; ++t) {
    const std::size_t k = t - trace.begin;
    switch (trace.kind[k]) {
      case StepKind::none:
        fail(ErrorCode::runtime, "window extends past the end of the frame");
      case StepKind::novel:
        ++novel;
        break;
      case StepKind::unprofiled:
        break;
      case StepKind::profiled: {
        bound_sum += trace.box_distance[k];
        r.bound_errors += trace.bound_errors[k];
        const int key = trace.key[k];
        auto it = std::find_if(groups.begin(), groups.end(), [key](const auto& g) { return g.first == key; });
        if (it == groups.end()) {
          groups.push_back({key, {trace.max_corr[k], 1}});
        } else {
          it->second.first += trace.max_corr[k];
          ++it->second.second;
        }
        break;
      }
    }
  }
  const double n = static_cast<double>(n_pred);
  r.r_trans = norm == TransitionNorm::per_window ? static_cast<double>(novel) / n : static_cast<double>(novel);
  r.r_bound = bound_sum / n;
  if (groups.empty()) {
    r.r_conf = 1.0;
  } else {
    double worst = 1.0;
    for (const auto& g : groups) worst = std::min(worst, g.second.first / static_cast<double>(g.second.second));
    r.r_conf = 1.0 - worst;
  }
  return r;
}

namespace {

SensorResiduals single_window(const NormalityModel& model, const SensorFrame& scaled, IndexRange window,
                              std::size_t sensor, double epsilon, TransitionNorm norm) {
  const auto d = static_cast<std::size_t>(model.hyper.delta);
  require(window.end <= scaled.length(), "window exceeds the frame");
  require(window.size() > d, "window length n_pred must exceed delta (n_pred=" +
                                 std::to_string(window.size()) + ", delta=" + std::to_string(d) + ")");
  const auto tr = trace_sensor(model, scaled, sensor, {window.begin, window.end - d}, epsilon);
  return window_residuals(model, tr, window.begin, window.size(), norm);
}

}  // namespace

double r_trans(const NormalityModel& model, const SensorFrame& scaled, IndexRange window,
               std::size_t sensor, TransitionNorm norm) {
  return single_window(model, scaled, window, sensor, 1.0, norm).r_trans;
}

double r_bound(const NormalityModel& model, const SensorFrame& scaled, IndexRange window,
               std::size_t sensor, double epsilon) {
  return single_window(model, scaled, window, sensor, epsilon, TransitionNorm::per_window).r_bound;
}

double r_conf(const NormalityModel& model, const SensorFrame& scaled, IndexRange window,
              std::size_t sensor) {
  return single_window(model, scaled, window, sensor, 1.0, TransitionNorm::per_window).r_conf;
}

double sensor_score(const SensorResiduals& r, const Normalizers& normalizers, std::size_t sensor) {
  const double bound = r.r_bound / std::max(normalizers.bound_max.at(sensor), kNormalizerFloor);
  const double conf = r.r_conf / std::max(normalizers.conf_max.at(sensor), kNormalizerFloor);
  return std::max({r.r_trans, bound, conf});
}

double aggregate(std::span<const SensorResiduals> sensors, const Normalizers& normalizers) {
  double best = 0.0;
  for (std::size_t i = 0; i < sensors.size(); ++i) best = std::max(best, sensor_score(sensors[i], normalizers, i));
  return best;
}

ScoreTable score_starts(const NormalityModel& model, const SensorFrame& frame, const ScoreOptions& options,
                        const Normalizers& normalizers, std::size_t first_start, std::size_t last_start) {
  options.window.validate(model.hyper.delta);
  require(normalizers.bound_max.size() == model.sensor_count() &&
              normalizers.conf_max.size() == model.sensor_count(),
          "normalizers do not match the model's sensors");
  const std::size_t n = options.window.length;
  const auto d = static_cast<std::size_t>(model.hyper.delta);
  ScoreTable table(model.sensor_names, n);
  if (frame.length() < n) return table;
  last_start = std::min(last_start, frame.length() - n + 1);
  if (first_start >= last_start) return table;

  const SensorFrame scaled = apply_scaler(frame, model.scaler);
  const IndexRange span{first_start, last_start - 1 + n - d};
  std::vector<SensorTrace> traces(model.sensor_count());
  parallel_for(model.sensor_count(), options.jobs, [&](std::size_t i) {
    traces[i] = trace_sensor(model, scaled, i, span, options.epsilon);
  });

  std::vector<std::size_t> starts;
  for (std::size_t s = first_start; s < last_start; s += options.window.stride) starts.push_back(s);
  std::vector<SensorResiduals> res(starts.size() * model.sensor_count());
  parallel_for(starts.size(), options.jobs, [&](std::size_t k) {
    for (std::size_t i = 0; i < model.sensor_count(); ++i)
      res[k * model.sensor_count() + i] = window_residuals(model, traces[i], starts[k], n, options.rtrans_norm);
  });
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::span<const SensorResiduals> row(res.data() + k * model.sensor_count(), model.sensor_count());
    table.append(starts[k], row, aggregate(row, normalizers));
  }
  return table;
}

ScoreTable score_frame(const NormalityModel& model, const SensorFrame& frame, const ScoreOptions& options,
                       const Normalizers& normalizers) {
  return score_starts(model, frame, options, normalizers, 0, frame.length());
}

Normalizers calibrate(const NormalityModel& model, const SensorFrame& frame, const ScoreOptions& options) {
  options.window.validate(model.hyper.delta);
  const std::size_t n = options.window.length;
  const IndexRange train = model.train_range;
  require(train.end <= frame.length(), "frame does not cover the model's training range");
  require(train.size() >= n, "training range is shorter than one window");

  Normalizers norm;
  norm.n_pred = n;
  norm.epsilon = options.epsilon;
  norm.bound_max.assign(model.sensor_count(), 0.0);
  norm.conf_max.assign(model.sensor_count(), 0.0);
  Normalizers unit = norm;
  unit.bound_max.assign(model.sensor_count(), 1.0);
  unit.conf_max.assign(model.sensor_count(), 1.0);

  ScoreOptions opts = options;
  opts.window.stride = 1;
  const ScoreTable table = score_starts(model, frame, opts, unit, train.begin, train.end - n + 1);
  for (std::size_t k = 0; k < table.window_count(); ++k) {
    for (std::size_t i = 0; i < model.sensor_count(); ++i) {
      norm.bound_max[i] = std::max(norm.bound_max[i], table.residuals(k, i).r_bound);
      norm.conf_max[i] = std::max(norm.conf_max[i], table.residuals(k, i).r_conf);
    }
  }
  for (std::size_t i = 0; i < model.sensor_count(); ++i) {
    norm.bound_max[i] = std::max(norm.bound_max[i], kNormalizerFloor);
    norm.conf_max[i] = std::max(norm.conf_max[i], kNormalizerFloor);
  }
  return norm;
}

std::vector<double> smooth_max(std::span<const double> scores, std::size_t window) {
  require(window >= 1, "smoothing window must be >= 1");
  std::vector<double> out(scores.size());
  std::deque<std::size_t> dq;  // indices with decreasing scores
  for (std::size_t t = 0; t < scores.size(); ++t) {
    while (!dq.empty() && scores[dq.back()] <= scores[t]) dq.pop_back();
    dq.push_back(t);
    if (dq.front() + window <= t) dq.pop_front();
    out[t] = scores[dq.front()];
  }
  return out;
}

std::string format_scores_csv(const ScoreTable& table, const Normalizers& normalizers) {
  std::string out = "window_start,sensor,r_trans,r_bound,r_conf,aggregated\n";
  for (std::size_t k = 0; k < table.window_count(); ++k) {
    const std::string start = std::to_string(table.window_start(k));
    SensorResiduals peak;
    for (std::size_t i = 0; i < table.sensor_count(); ++i) {
      const auto& r = table.residuals(k, i);
      peak.r_trans = std::max(peak.r_trans, r.r_trans);
      peak.r_bound = std::max(peak.r_bound, r.r_bound);
      peak.r_conf = std::max(peak.r_conf, r.r_conf);
      out += start + "," + table.sensor_names()[i] + "," + format_double(r.r_trans) + "," +
             format_double(r.r_bound) + "," + format_double(r.r_conf) + "," +
             format_double(sensor_score(r, normalizers, i)) + "\n";
    }
    out += start + ",__agg__," + format_double(peak.r_trans) + "," + format_double(peak.r_bound) + "," +
           format_double(peak.r_conf) + "," + format_double(table.aggregated(k)) + "\n";
  }
  return out;
}

void save_scores_csv(const ScoreTable& table, const Normalizers& normalizers, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
  out << format_scores_csv(table, normalizers);
  if (!out) fail(ErrorCode::io, "write to '" + path + "' failed");
}

std::vector<std::pair<std::size_t, double>> load_aggregated_scores(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("window_start,sensor,", 0) != 0)
    fail(ErrorCode::format, "'" + path + "' is not a residual score file");
  std::vector<std::pair<std::size_t, double>> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) fail(ErrorCode::format, "malformed score row: " + line);
    if (f[1] != "__agg__") continue;
    out.emplace_back(static_cast<std::size_t>(parse_double(f[0])), parse_double(f[5]));
  }
  return out;
}

std::string to_string(TransitionNorm norm) {
  return norm == TransitionNorm::per_window ? "per_window" : "raw_count";
}

TransitionNorm transition_norm_from_string(const std::string& text) {
  if (text == "per_window") return TransitionNorm::per_window;
  if (text == "raw_count") return TransitionNorm::raw_count;
  fail(ErrorCode::invalid_argument, "unknown rtrans_norm '" + text + "' (expected per_window|raw_count)");
}

}  // namespace qw
