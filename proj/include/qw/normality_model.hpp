#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qw/quantizer.hpp"
#include "qw/timeseries.hpp"

namespace qw {

/// Quantization levels of one sensor at t and t + delta.
struct Transition {
  int from = 0;
  int to = 0;

  auto operator<=>(const Transition&) const = default;
};

inline constexpr std::size_t kNoTimestamp = std::numeric_limits<std::size_t>::max();

/// Delta-1 delayed scaled values of the owner sensor (oldest first) followed by
/// the current scaled values of every sensor. K-Means centroids carry
/// kNoTimestamp.
struct ConfigurationVector {
  std::vector<double> values;
  std::size_t sensor = 0;
  std::size_t timestamp = kNoTimestamp;

  friend bool operator==(const ConfigurationVector&, const ConfigurationVector&) = default;
};

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// Normality parameters seen from one sensor: the known transitions, the
/// componentwise box per transition and the low-correlation representatives
/// per transition. Transitions observed only before a full configuration
/// vector exists have no box and no representatives.
struct SensorNormality {
  std::set<Transition> transitions;
  std::map<Transition, Bounds> bounds;
  std::map<Transition, std::vector<ConfigurationVector>> representatives;

  std::size_t representative_count() const;
  friend bool operator==(const SensorNormality&, const SensorNormality&) = default;
};

enum class BoundsMode { minmax, percentile };

struct HyperParams {
  int n_levels = 8;
  int delta = 20;
  double eta = 0.95;
  std::optional<int> n_clusters;
  BoundsMode bounds = BoundsMode::minmax;
  double bounds_percentile = 0.1;  // percent, used when bounds == percentile
  ScalerKind scaler = ScalerKind::standard;

  void validate() const;
  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

/// Training maxima of r_bound and r_conf per sensor, for one window length
/// and epsilon.
struct Normalizers {
  std::size_t n_pred = 0;
  double epsilon = 0.0;
  std::vector<double> bound_max;
  std::vector<double> conf_max;

  friend bool operator==(const Normalizers&, const Normalizers&) = default;
};

struct NormalityModel {
  HyperParams hyper;
  std::vector<std::string> sensor_names;
  Scaler scaler;
  std::vector<Quantizer> quantizers;
  std::vector<SensorNormality> sensors;
  IndexRange train_range;
  std::uint64_t version = 1;
  std::optional<Normalizers> normalizers;

  std::size_t sensor_count() const { return sensor_names.size(); }
  std::size_t config_length() const {
    return static_cast<std::size_t>(hyper.delta) + sensor_names.size() - 1;
  }

  friend bool operator==(const NormalityModel&, const NormalityModel&) = default;
};

/// (t, (levels[t], levels[t + delta])) for every t with t + delta in range.
std::vector<std::pair<std::size_t, Transition>> compute_transitions(std::span<const int> levels,
                                                                    int delta);

ConfigurationVector extract_configuration(const SensorFrame& scaled, std::size_t sensor,
                                          std::size_t t, int delta);

/// Transitions and configuration vectors one sensor sees over `range` of a
/// scaled frame. Vectors are grouped per transition in chronological order.
struct SensorObservations {
  std::set<Transition> transitions;
  std::map<Transition, std::vector<ConfigurationVector>> configurations;
};

SensorObservations observe_sensor(const SensorFrame& scaled, std::size_t sensor,
                                  const Quantizer& quantizer, IndexRange range, int delta);

/// Greedy chronological filter: keeps a vector iff its absolute correlation
/// with every vector kept so far is below eta.
std::vector<ConfigurationVector> select_representatives(
    const std::vector<ConfigurationVector>& candidates, double eta);

/// Lloyd K-Means (k-means++ seeding, seed 0, at most 50 iterations). Returns
/// the input unchanged when it has at most n_clusters vectors.
std::vector<ConfigurationVector> kmeans_reduce(const std::vector<ConfigurationVector>& vectors,
                                               int n_clusters);

Bounds compute_bounds(const std::vector<ConfigurationVector>& vectors, BoundsMode mode,
                      double percentile);

/// Fits the model on rows in `train_range` of a raw (unscaled) frame.
NormalityModel fit(const SensorFrame& frame, IndexRange train_range, const HyperParams& hyper);

/// Number of scalars stored in all representative sets.
std::size_t np3_scalar_count(const NormalityModel& model);
/// (delta + N_s - 1) * n_w * N_s * n_q^2; requires n_clusters.
std::size_t np3_scalar_bound(const NormalityModel& model);

std::string to_string(BoundsMode mode);
BoundsMode bounds_mode_from_string(const std::string& text);

}  // namespace qw
