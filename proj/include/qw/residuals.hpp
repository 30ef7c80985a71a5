#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qw/normality_model.hpp"

namespace qw {

/// How r_trans is normalized: by the window length (per_window) or left as
/// the raw count of novel transitions.
enum class TransitionNorm { per_window, raw_count };

struct WindowSpec {
  std::size_t length = 100;
  std::size_t stride = 1;

  void validate(int delta) const;
};

struct ScoreOptions {
  WindowSpec window;
  double epsilon = 1.0;
  TransitionNorm rtrans_norm = TransitionNorm::per_window;
  std::size_t jobs = 0;
};

struct SensorResiduals {
  double r_trans = 0.0;
  double r_bound = 0.0;
  double r_conf = 0.0;
  /// Out-of-box components skipped because their interval was degenerate
  /// (lower == upper with epsilon == 0).
  std::size_t bound_errors = 0;
};

struct ResidualReport {
  std::size_t window_start = 0;
  std::vector<SensorResiduals> sensors;
  double aggregated = 0.0;
};

/// Residuals for a run of windows, stored window-major.
class ScoreTable {
 public:
  ScoreTable() = default;
  ScoreTable(std::vector<std::string> sensor_names, std::size_t n_pred);

  const std::vector<std::string>& sensor_names() const { return names_; }
  std::size_t sensor_count() const { return names_.size(); }
  std::size_t n_pred() const { return n_pred_; }
  std::size_t window_count() const { return starts_.size(); }

  std::size_t window_start(std::size_t k) const { return starts_[k]; }
  const SensorResiduals& residuals(std::size_t k, std::size_t sensor) const {
    return residuals_[k * names_.size() + sensor];
  }
  double aggregated(std::size_t k) const { return aggregated_[k]; }
  const std::vector<double>& aggregated() const { return aggregated_; }
  const std::vector<std::size_t>& starts() const { return starts_; }
  ResidualReport report(std::size_t k) const;

  void append(std::size_t start, std::span<const SensorResiduals> sensors, double aggregated);

 private:
  std::vector<std::string> names_;
  std::size_t n_pred_ = 0;
  std::vector<std::size_t> starts_;
  std::vector<SensorResiduals> residuals_;
  std::vector<double> aggregated_;
};

inline constexpr double kNormalizerFloor = 1e-12;

/// Distance of xi to [lo, hi], scaled by the interval width plus epsilon.
/// Throws ErrorCode::runtime when xi lies outside a zero-width interval and
/// epsilon is 0.
double interval_distance(double xi, double lo, double hi, double epsilon);

/// What the detector knows about one timestamp t of one sensor, i.e. about
/// the transition (q_t, q_{t+delta}) and the configuration vector at t.
enum class StepKind : std::uint8_t {
  none,        // t + delta lies past the end of the frame
  novel,       // transition not in NP1
  unprofiled,  // transition known but no box/representatives apply at t
  profiled,    // known transition with a full configuration vector
};

struct SensorTrace {
  std::size_t begin = 0;
  std::vector<StepKind> kind;
  std::vector<int> key;  // from * n_q + to
  std::vector<double> box_distance;
  std::vector<double> max_corr;
  std::vector<std::uint32_t> bound_errors;

  std::size_t end() const { return begin + kind.size(); }
};

SensorTrace trace_sensor(const NormalityModel& model, const SensorFrame& scaled, std::size_t sensor,
                         IndexRange timestamps, double epsilon);

SensorResiduals window_residuals(const NormalityModel& model, const SensorTrace& trace,
                                 std::size_t start, std::size_t n_pred, TransitionNorm norm);

/// Single-window residuals on a scaled frame.
double r_trans(const NormalityModel& model, const SensorFrame& scaled, IndexRange window,
               std::size_t sensor, TransitionNorm norm = TransitionNorm::per_window);
double r_bound(const NormalityModel& model, const SensorFrame& scaled, IndexRange window,
               std::size_t sensor, double epsilon);
double r_conf(const NormalityModel& model, const SensorFrame& scaled, IndexRange window,
              std::size_t sensor);

double aggregate(std::span<const SensorResiduals> sensors, const Normalizers& normalizers);
double sensor_score(const SensorResiduals& r, const Normalizers& normalizers, std::size_t sensor);

/// Training maxima of r_bound / r_conf over every stride-1 window inside the
/// model's training range of `frame` (raw values).
Normalizers calibrate(const NormalityModel& model, const SensorFrame& frame,
                      const ScoreOptions& options);

/// Slides windows over the whole raw frame.
ScoreTable score_frame(const NormalityModel& model, const SensorFrame& frame,
                       const ScoreOptions& options, const Normalizers& normalizers);

/// Windows whose start lies in [first_start, last_start) at the given stride.
ScoreTable score_starts(const NormalityModel& model, const SensorFrame& frame,
                        const ScoreOptions& options, const Normalizers& normalizers,
                        std::size_t first_start, std::size_t last_start);

/// Trailing sliding maximum; the first window-1 outputs use the prefix.
std::vector<double> smooth_max(std::span<const double> scores, std::size_t window);

/// One row per (window, sensor) plus an `__agg__` row per window.
std::string format_scores_csv(const ScoreTable& table, const Normalizers& normalizers);
void save_scores_csv(const ScoreTable& table, const Normalizers& normalizers, const std::string& path);
/// Reads back the `__agg__` rows: (window_start, aggregated).
std::vector<std::pair<std::size_t, double>> load_aggregated_scores(const std::string& path);

std::string to_string(TransitionNorm norm);
TransitionNorm transition_norm_from_string(const std::string& text);

}  // namespace qw
