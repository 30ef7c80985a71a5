#include "qw/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "qw/error.hpp"
#include "qw/parallel.hpp"

namespace qw {

namespace {

struct ClassCounts {
  double positives = 0.0;
  double negatives = 0.0;
};

ClassCounts check_inputs(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), "scores and labels differ in length (" + std::to_string(scores.size()) +
                                              " vs " + std::to_string(labels.size()) + ")");
  ClassCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] == 0 || labels[i] == 1, "labels must be 0 or 1");
    require(!std::isnan(scores[i]), "scores contain NaN");
    (labels[i] ? c.positives : c.negatives) += 1.0;
  }
  require(c.positives > 0 && c.negatives > 0, "metrics need both normal and anomalous labels");
  return c;
}

// indices sorted by decreasing score
std::vector<std::size_t> order_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

// (fp, tp) counts after each group of tied scores, highest scores first
std::vector<std::pair<double, double>> roc_counts(std::span<const double> scores, std::span<const int> labels) {
  const auto idx = order_desc(scores);
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  double fp = 0.0, tp = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp) += 1.0;
      ++j;
    }
    pts.emplace_back(fp, tp);
    i = j;
  }
  return pts;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  const ClassCounts c = check_inputs(scores, labels);
  const auto pts = roc_counts(scores, labels);
  // sum over groups of pos_g * (neg strictly below + neg_g / 2), taken from the top
  double pairs = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double dfp = pts[k].first - pts[k - 1].first;
    const double dtp = pts[k].second - pts[k - 1].second;
    pairs += dtp * (c.negatives - pts[k].first + 0.5 * dfp);
  }
  return pairs / (c.positives * c.negatives);
}

double partial_auc(std::span<const double> scores, std::span<const int> labels, double max_fpr, PaucScale scale) {
  require(max_fpr > 0.0 && max_fpr <= 1.0, "max_fpr must lie in ]0,1]");
  const ClassCounts c = check_inputs(scores, labels);
  const auto pts = roc_counts(scores, labels);
  double area = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double x0 = pts[k - 1].first / c.negatives, y0 = pts[k - 1].second / c.positives;
    const double x1 = pts[k].first / c.negatives, y1 = pts[k].second / c.positives;
    if (x0 >= max_fpr) break;
    if (x1 <= max_fpr) {
      area += (x1 - x0) * (y0 + y1) * 0.5;
    } else {
      const double y = y0 + (y1 - y0) * (max_fpr - x0) / (x1 - x0);
      area += (max_fpr - x0) * (y0 + y) * 0.5;
      break;
    }
  }
  if (scale == PaucScale::raw) return area;
  const double min_area = 0.5 * max_fpr * max_fpr;
  const double max_area = max_fpr;
  return 0.5 * (1.0 + (area - min_area) / (max_area - min_area));
}

F1Result best_f1(std::span<const double> scores, std::span<const int> labels) {
  const ClassCounts c = check_inputs(scores, labels);
  const auto idx = order_desc(scores);
  F1Result best{0.0, std::numeric_limits<double>::infinity()};
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp) += 1.0;
      ++j;
    }
    const double f1 = 2.0 * tp / (tp + fp + c.positives);
    if (f1 > best.f1) best = {f1, scores[idx[i]]};
    i = j;
  }
  return best;
}

std::vector<double> per_timestamp_scores(std::span<const std::size_t> window_starts,
                                         std::span<const double> window_scores, std::size_t n_pred,
                                         std::size_t length) {
  require(window_starts.size() == window_scores.size(), "window starts and scores differ in length");
  require(!window_starts.empty(), "no scored windows to map onto timestamps");
  require(n_pred >= 1, "n_pred must be positive");
  std::vector<double> out(length);
  std::size_t j = 0;
  for (std::size_t t = 0; t < length; ++t) {
    while (j + 1 < window_starts.size() && window_starts[j + 1] + n_pred - 1 <= t) ++j;
    out[t] = window_scores[j];
  }
  return out;
}

std::vector<double> per_timestamp_scores(const ScoreTable& table, std::size_t length) {
  return per_timestamp_scores(table.starts(), table.aggregated(), table.n_pred(), length);
}

std::vector<MetricReport> evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                                          const MetricOptions& options, const std::string& source) {
  require(!options.smoothing.empty(), "at least one smoothing window is needed");
  std::vector<MetricReport> out;
  for (std::size_t w : options.smoothing) {
    const std::vector<double> s = w == 1 ? std::vector<double>(scores.begin(), scores.end()) : smooth_max(scores, w);
    MetricReport r;
    r.source = source;
    r.smoothing = w;
    r.roc_auc = roc_auc(s, labels);
    r.pauc = partial_auc(s, labels, options.max_fpr, options.pauc_scale);
    const F1Result f1 = best_f1(s, labels);
    r.f1 = f1.f1;
    r.f1_threshold = f1.threshold;
    out.push_back(r);
  }
  return out;
}

RunEvaluation evaluate_run(const NormalityModel& model, const SensorFrame& frame, const ScoreOptions& score,
                           const MetricOptions& metrics) {
  require(frame.has_labels(), "evaluation needs a labeled frame");
  RunEvaluation out;
  if (model.normalizers && model.normalizers->n_pred == score.window.length &&
      model.normalizers->epsilon == score.epsilon) {
    out.normalizers = *model.normalizers;
  } else {
    out.normalizers = calibrate(model, frame, score);
  }
  out.table = score_frame(model, frame, score, out.normalizers);
  out.timestamp_scores = per_timestamp_scores(out.table, frame.length());
  out.metrics = evaluate_scores(out.timestamp_scores, frame.labels(), metrics);
  return out;
}

std::vector<double> load_timestamp_scores(const std::string& path, std::size_t n_pred, std::size_t length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open '" + path + "'");
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header.rfind("window_start,sensor,", 0) == 0) {
    in.close();
    const auto rows = load_aggregated_scores(path);
    std::vector<std::size_t> starts;
    std::vector<double> values;
    for (const auto& [s, v] : rows) {
      starts.push_back(s);
      values.push_back(v);
    }
    return per_timestamp_scores(starts, values, n_pred, length);
  }
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  const auto it = std::find(cols.begin(), cols.end(), "score");
  if (it == cols.end()) fail(ErrorCode::format, "'" + path + "' has no 'score' column");
  const auto col = static_cast<std::size_t>(it - cols.begin());
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) f.push_back(c);
    if (f.size() != cols.size()) fail(ErrorCode::format, "ragged row in '" + path + "': " + line);
    out.push_back(parse_double(f[col]));
  }
  if (out.size() != length)
    fail(ErrorCode::format, "'" + path + "' has " + std::to_string(out.size()) + " scores for " +
                                std::to_string(length) + " timestamps");
  return out;
}

std::string format_metrics_csv(const std::vector<MetricReport>& reports) {
  std::string out = "source,smoothing,roc_auc,pauc,f1_best,f1_threshold\n";
  for (const auto& r : reports)
    out += r.source + "," + std::to_string(r.smoothing) + "," + format_double(r.roc_auc) + "," +
           format_double(r.pauc) + "," + format_double(r.f1) + "," + format_double(r.f1_threshold) + "\n";
  return out;
}

std::size_t SweepGrid::size() const {
  return n_levels.size() * deltas.size() * etas.size() * epsilons.size() * n_clusters.size() * n_pred.size();
}

std::vector<SweepPoint> expand_grid(const SweepGrid& grid, const HyperParams& base) {
  require(grid.size() > 0, "sweep grid is empty");
  std::vector<SweepPoint> out;
  for (int q : grid.n_levels)
    for (int d : grid.deltas)
      for (double e : grid.etas)
        for (double eps : grid.epsilons)
          for (const auto& w : grid.n_clusters)
            for (std::size_t n : grid.n_pred) {
              SweepPoint p;
              p.hyper = base;
              p.hyper.n_levels = q;
              p.hyper.delta = d;
              p.hyper.eta = e;
              p.hyper.n_clusters = w;
              p.epsilon = eps;
              p.n_pred = n;
              out.push_back(p);
            }
  return out;
}

std::vector<SweepRow> sweep(const SensorFrame& frame, IndexRange train_range, const std::vector<SweepPoint>& points,
                            const MetricOptions& metrics, std::size_t jobs) {
  require(!points.empty(), "sweep grid is empty");
  require(frame.has_labels(), "sweep needs a labeled frame");
  std::vector<SweepRow> rows(points.size());
  parallel_for(points.size(), jobs, [&](std::size_t k) {
    SweepRow& row = rows[k];
    row.point = points[k];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const NormalityModel model = fit(frame, train_range, row.point.hyper);
      ScoreOptions opts;
      opts.window.length = row.point.n_pred;
      opts.epsilon = row.point.epsilon;
      opts.jobs = 1;
      const Normalizers norm = calibrate(model, frame, opts);
      const ScoreTable table = score_frame(model, frame, opts, norm);
      const auto s = per_timestamp_scores(table, frame.length());
      row.roc_auc = roc_auc(s, frame.labels());
      row.pauc = partial_auc(s, frame.labels(), metrics.max_fpr, metrics.pauc_scale);
      row.f1 = best_f1(s, frame.labels()).f1;
    } catch (const std::exception& e) {
      row.status = e.what();
    }
    row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  return rows;
}

namespace {

std::string clean_cell(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "n_q,delta,eta,epsilon,n_w,n_pred,status,roc_auc,pauc,f1_best,runtime_s\n";
  for (const auto& r : rows) {
    const auto& h = r.point.hyper;
    out += std::to_string(h.n_levels) + "," + std::to_string(h.delta) + "," + format_double(h.eta) + "," +
           format_double(r.point.epsilon) + "," + (h.n_clusters ? std::to_string(*h.n_clusters) : "") + "," +
           std::to_string(r.point.n_pred) + "," + clean_cell(r.status) + ",";
    if (r.status == "ok")
      out += format_double(r.roc_auc) + "," + format_double(r.pauc) + "," + format_double(r.f1);
    else
      out += ",,";
    out += "," + format_double(r.runtime_s) + "\n";
  }
  return out;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  s.max = *std::max_element(values.begin(), values.end());
  return s;
}

std::string format_sweep_summary(const std::vector<SweepRow>& rows) {
  std::vector<double> auc, pauc, f1;
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    auc.push_back(r.roc_auc);
    pauc.push_back(r.pauc);
    f1.push_back(r.f1);
  }
  auto line = [](const char* name, std::span<const double> v) {
    const Summary s = summarize(v);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-8s %.3f ± %.3f (%.3f)\n", name, s.mean, s.std, s.max);
    return std::string(buf);
  };
  std::string out = std::to_string(auc.size()) + " of " + std::to_string(rows.size()) + " grid points succeeded\n";
  if (auc.empty()) return out;
  out += line("roc_auc", auc);
  out += line("pauc", pauc);
  out += line("f1_best", f1);
  out += "f1_best: best F1 over all score thresholds\n";
  return out;
}

}  // namespace qw
