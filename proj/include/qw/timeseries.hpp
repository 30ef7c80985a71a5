#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qw {

/// Half-open index interval [begin, end) over the rows of a frame.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return end <= begin; }
  bool contains(std::size_t t) const { return t >= begin && t < end; }
  bool contains(const IndexRange& other) const {
    return other.begin >= begin && other.end <= end;
  }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Annotated span of rows, e.g. "normal" or "fault:sigma".
struct Interval {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string tag;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Aligned multivariate series. Columns are stored sensor-major. Immutable
/// once constructed.
class SensorFrame {
 public:
  SensorFrame(std::vector<std::string> sensor_names, std::vector<double> timestamps,
              std::vector<std::vector<double>> columns,
              std::optional<std::vector<int>> labels = std::nullopt,
              std::vector<Interval> intervals = {});

  std::size_t length() const { return timestamps_.size(); }
  std::size_t sensor_count() const { return names_.size(); }

  const std::vector<std::string>& sensor_names() const { return names_; }
  const std::vector<double>& timestamps() const { return timestamps_; }
  std::span<const double> column(std::size_t sensor) const { return columns_.at(sensor); }
  double value(std::size_t sensor, std::size_t t) const { return columns_[sensor][t]; }

  bool has_labels() const { return labels_.has_value(); }
  std::span<const int> labels() const;
  const std::vector<Interval>& intervals() const { return intervals_; }

  /// Rows in `range`, with timestamps, labels and clipped intervals rebased.
  SensorFrame slice(IndexRange range) const;
  SensorFrame with_labels(std::vector<int> labels) const;
  SensorFrame with_intervals(std::vector<Interval> intervals) const;
  SensorFrame with_columns(std::vector<std::vector<double>> columns) const;

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> timestamps_;
  std::vector<std::vector<double>> columns_;
  std::optional<std::vector<int>> labels_;
  std::vector<Interval> intervals_;
};

/// Column mapping for CSV ingestion. An empty sensor list selects every column
/// other than the timestamp and label columns, in file order.
struct CsvSchema {
  std::string timestamp_column = "timestamp";
  std::vector<std::string> sensors;
  std::string label_column = "label";
};

SensorFrame load_csv(const std::string& path, const CsvSchema& schema = {});
SensorFrame parse_csv(const std::string& text, const CsvSchema& schema = {});
void save_csv(const SensorFrame& frame, const std::string& path);
std::string format_csv(const SensorFrame& frame);

/// Shortest text form that parses back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text);

enum class ScalerKind { standard, minmax };

inline constexpr double kSpreadFloor = 1e-12;

/// Per-sensor affine map x -> (x - center) / spread.
class Scaler {
 public:
  Scaler() = default;
  Scaler(ScalerKind kind, std::vector<std::string> sensor_names, std::vector<double> center,
         std::vector<double> spread);

  ScalerKind kind() const { return kind_; }
  const std::vector<std::string>& sensor_names() const { return names_; }
  const std::vector<double>& center() const { return center_; }
  const std::vector<double>& spread() const { return spread_; }

  double apply(std::size_t sensor, double x) const { return (x - center_[sensor]) / spread_[sensor]; }
  double invert(std::size_t sensor, double x) const { return x * spread_[sensor] + center_[sensor]; }

  friend bool operator==(const Scaler&, const Scaler&) = default;

 private:
  ScalerKind kind_ = ScalerKind::standard;
  std::vector<std::string> names_;
  std::vector<double> center_;
  std::vector<double> spread_;
};

/// Fits center/spread from rows in `train_range` only. Standard uses the mean
/// and population standard deviation; minmax uses the minimum and the range.
/// Spreads are floored at kSpreadFloor.
Scaler fit_scaler(const SensorFrame& frame, IndexRange train_range,
                  ScalerKind kind = ScalerKind::standard);
SensorFrame apply_scaler(const SensorFrame& frame, const Scaler& scaler);
SensorFrame invert_scaler(const SensorFrame& frame, const Scaler& scaler);

std::string to_string(ScalerKind kind);
ScalerKind scaler_kind_from_string(const std::string& text);

}  // namespace qw
