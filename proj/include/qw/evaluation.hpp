#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qw/normality_model.hpp"
#include "qw/residuals.hpp"

namespace qw {

/// Mann-Whitney ROC-AUC, ties counted one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

enum class PaucScale { mcclish, raw };

/// Area under the ROC curve for FPR in [0, max_fpr]. McClish scaling maps a
/// random classifier to 0.5 and a perfect one to 1; raw returns the area.
double partial_auc(std::span<const double> scores, std::span<const int> labels, double max_fpr = 0.1,
                   PaucScale scale = PaucScale::mcclish);

struct F1Result {
  double f1 = 0.0;
  double threshold = 0.0;  // predict anomalous iff score >= threshold
};

/// Best F1 over every distinct score used as threshold (plus +inf). Among
/// equal F1 values the highest threshold wins.
F1Result best_f1(std::span<const double> scores, std::span<const int> labels);

/// Timestamp t takes the aggregated score of the last window ending at or
/// before t; timestamps before the first window ends take the first window.
std::vector<double> per_timestamp_scores(std::span<const std::size_t> window_starts,
                                         std::span<const double> window_scores, std::size_t n_pred,
                                         std::size_t length);
std::vector<double> per_timestamp_scores(const ScoreTable& table, std::size_t length);

struct MetricReport {
  std::string source;
  std::size_t smoothing = 1;
  double roc_auc = 0.0;
  double pauc = 0.0;
  double f1 = 0.0;
  double f1_threshold = 0.0;
};

struct MetricOptions {
  std::vector<std::size_t> smoothing{1, 500, 1000, 5000};
  double max_fpr = 0.1;
  PaucScale pauc_scale = PaucScale::mcclish;
};

/// Metrics of per-timestamp scores, once per smoothing window.
std::vector<MetricReport> evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                                          const MetricOptions& options, const std::string& source = "model");

struct RunEvaluation {
  Normalizers normalizers;
  ScoreTable table;
  std::vector<double> timestamp_scores;
  std::vector<MetricReport> metrics;
};

/// Scores a labeled frame with the model (normalizers from the model when it
/// carries matching ones, else calibrated) and evaluates it.
RunEvaluation evaluate_run(const NormalityModel& model, const SensorFrame& frame, const ScoreOptions& score,
                           const MetricOptions& metrics);

/// Per-timestamp scores from an external file: either a residual score file
/// (`__agg__` rows, mapped with n_pred) or a one-column CSV with a `score`
/// header and one row per timestamp (an optional leading index column is
/// ignored).
std::vector<double> load_timestamp_scores(const std::string& path, std::size_t n_pred, std::size_t length);

std::string format_metrics_csv(const std::vector<MetricReport>& reports);

struct SweepGrid {
  std::vector<int> n_levels{8};
  std::vector<int> deltas{20};
  std::vector<double> etas{0.95};
  std::vector<double> epsilons{1.0};
  std::vector<std::optional<int>> n_clusters{std::nullopt};
  std::vector<std::size_t> n_pred{100};

  std::size_t size() const;
};

struct SweepPoint {
  HyperParams hyper;
  double epsilon = 1.0;
  std::size_t n_pred = 100;
};

struct SweepRow {
  SweepPoint point;
  std::string status = "ok";  // or the error message
  double roc_auc = 0.0;
  double pauc = 0.0;
  double f1 = 0.0;
  double runtime_s = 0.0;
};

std::vector<SweepPoint> expand_grid(const SweepGrid& grid, const HyperParams& base);

/// Fits, scores and evaluates every grid point on the unsmoothed scores. A
/// failing point is recorded with its error and does not stop the sweep.
std::vector<SweepRow> sweep(const SensorFrame& frame, IndexRange train_range, const std::vector<SweepPoint>& points,
                            const MetricOptions& metrics, std::size_t jobs);

std::string format_sweep_csv(const std::vector<SweepRow>& rows);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  double max = 0.0;
};

Summary summarize(std::span<const double> values);

/// "roc_auc  0.850 ± 0.150 (0.997)" lines over the successful rows.
std::string format_sweep_summary(const std::vector<SweepRow>& rows);

}  // namespace qw
