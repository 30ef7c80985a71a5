#include "qw/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qw/error.hpp"

namespace qw {

namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    fields.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

SensorFrame::SensorFrame(std::vector<std::string> sensor_names, std::vector<double> timestamps,
                         std::vector<std::vector<double>> columns,
                         std::optional<std::vector<int>> labels, std::vector<Interval> intervals)
    : names_(std::move(sensor_names)),
      timestamps_(std::move(timestamps)),
      columns_(std::move(columns)),
      labels_(std::move(labels)),
      intervals_(std::move(intervals)) {
  require(!names_.empty(), "frame needs at least one sensor");
  require(columns_.size() == names_.size(), "column count does not match sensor names");
  require(!timestamps_.empty(), "frame needs at least one row");
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].size() != timestamps_.size())
      fail(ErrorCode::format, "column '" + names_[i] + "' has " + std::to_string(columns_[i].size()) +
                                  " rows, expected " + std::to_string(timestamps_.size()));
  }
  for (std::size_t t = 1; t < timestamps_.size(); ++t) {
    if (!(timestamps_[t] > timestamps_[t - 1]))
      fail(ErrorCode::format, "timestamps must be strictly increasing (row " + std::to_string(t) + ")");
  }
  if (labels_) {
    if (labels_->size() != timestamps_.size())
      fail(ErrorCode::format, "label column length does not match the frame");
    for (int l : *labels_)
      if (l != 0 && l != 1) fail(ErrorCode::format, "labels must be 0 or 1");
  }
  for (const auto& iv : intervals_) {
    if (iv.begin > iv.end || iv.end > timestamps_.size())
      fail(ErrorCode::format, "interval '" + iv.tag + "' lies outside the frame");
  }
}

std::span<const int> SensorFrame::labels() const {
  if (!labels_) fail(ErrorCode::invalid_argument, "frame carries no labels");
  return *labels_;
}

SensorFrame SensorFrame::slice(IndexRange range) const {
  require(!range.empty() && range.end <= length(), "slice range outside the frame");
  std::vector<double> ts(timestamps_.begin() + range.begin, timestamps_.begin() + range.end);
  std::vector<std::vector<double>> cols;
  cols.reserve(columns_.size());
  for (const auto& c : columns_) cols.emplace_back(c.begin() + range.begin, c.begin() + range.end);
  std::optional<std::vector<int>> lab;
  if (labels_) lab.emplace(labels_->begin() + range.begin, labels_->begin() + range.end);
  std::vector<Interval> ivs;
  for (const auto& iv : intervals_) {
    const auto b = std::max(iv.begin, range.begin);
    const auto e = std::min(iv.end, range.end);
    if (b < e) ivs.push_back({b - range.begin, e - range.begin, iv.tag});
  }
  return SensorFrame(names_, std::move(ts), std::move(cols), std::move(lab), std::move(ivs));
}

SensorFrame SensorFrame::with_labels(std::vector<int> labels) const {
  return SensorFrame(names_, timestamps_, columns_, std::move(labels), intervals_);
}

SensorFrame SensorFrame::with_intervals(std::vector<Interval> intervals) const {
  return SensorFrame(names_, timestamps_, columns_, labels_, std::move(intervals));
}

SensorFrame SensorFrame::with_columns(std::vector<std::vector<double>> columns) const {
  return SensorFrame(names_, timestamps_, std::move(columns), labels_, intervals_);
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (text.empty() || res.ec != std::errc() || res.ptr != last)
    fail(ErrorCode::format, "cannot parse '" + std::string(text) + "' as a real number");
  return value;
}

SensorFrame parse_csv(const std::string& text, const CsvSchema& schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::format, "empty CSV input");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_line(line);

  auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  const auto ts_col = find_column(schema.timestamp_column);
  if (!ts_col) fail(ErrorCode::format, "CSV header lacks a '" + schema.timestamp_column + "' column");
  const auto label_col = find_column(schema.label_column);

  std::vector<std::string> names;
  std::vector<std::size_t> sensor_cols;
  if (schema.sensors.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == *ts_col || (label_col && c == *label_col)) continue;
      names.push_back(header[c]);
      sensor_cols.push_back(c);
    }
  } else {
    for (const auto& s : schema.sensors) {
      const auto c = find_column(s);
      if (!c) fail(ErrorCode::format, "CSV header lacks sensor column '" + s + "'");
      names.push_back(s);
      sensor_cols.push_back(*c);
    }
  }
  if (names.empty()) fail(ErrorCode::format, "CSV declares no sensor columns");

  std::vector<double> ts;
  std::vector<std::vector<double>> cols(names.size());
  std::vector<int> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != header.size())
      fail(ErrorCode::format, "ragged row " + std::to_string(row) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    try {
      ts.push_back(parse_double(fields[*ts_col]));
      for (std::size_t i = 0; i < sensor_cols.size(); ++i) {
        const double v = parse_double(fields[sensor_cols[i]]);
        if (!std::isfinite(v)) fail(ErrorCode::format, "non-finite value");
        cols[i].push_back(v);
      }
      if (label_col) {
        const double l = parse_double(fields[*label_col]);
        if (l != 0.0 && l != 1.0) fail(ErrorCode::format, "label must be 0 or 1");
        labels.push_back(static_cast<int>(l));
      }
    } catch (const Error& e) {
      fail(ErrorCode::format, "row " + std::to_string(row) + ": " + e.what());
    }
  }
  if (ts.empty()) fail(ErrorCode::format, "CSV has no data rows");
  std::optional<std::vector<int>> lab;
  if (label_col) lab = std::move(labels);
  return SensorFrame(std::move(names), std::move(ts), std::move(cols), std::move(lab));
}

SensorFrame load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

std::string format_csv(const SensorFrame& frame) {
  std::string out = "timestamp";
  for (const auto& n : frame.sensor_names()) out += "," + n;
  if (frame.has_labels()) out += ",label";
  out += '\n';
  const auto labels = frame.has_labels() ? frame.labels() : std::span<const int>{};
  for (std::size_t t = 0; t < frame.length(); ++t) {
    out += format_double(frame.timestamps()[t]);
    for (std::size_t i = 0; i < frame.sensor_count(); ++i) {
      out += ',';
      out += format_double(frame.value(i, t));
    }
    if (frame.has_labels()) {
      out += ',';
      out += labels[t] ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

void save_csv(const SensorFrame& frame, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
  out << format_csv(frame);
  if (!out) fail(ErrorCode::io, "write to '" + path + "' failed");
}

Scaler::Scaler(ScalerKind kind, std::vector<std::string> sensor_names, std::vector<double> center,
               std::vector<double> spread)
    : kind_(kind), names_(std::move(sensor_names)), center_(std::move(center)), spread_(std::move(spread)) {
  require(center_.size() == names_.size() && spread_.size() == names_.size(),
          "scaler parameter count does not match sensor names");
  for (double s : spread_) require(s > 0.0, "scaler spread must be positive");
}

Scaler fit_scaler(const SensorFrame& frame, IndexRange train_range, ScalerKind kind) {
  require(!train_range.empty(), "scaler training range is empty");
  require(train_range.end <= frame.length(), "scaler training range exceeds the frame");
  std::vector<double> center, spread;
  for (std::size_t i = 0; i < frame.sensor_count(); ++i) {
    const auto col = frame.column(i).subspan(train_range.begin, train_range.size());
    if (kind == ScalerKind::standard) {
      double sum = 0.0;
      for (double x : col) sum += x;
      const double mean = sum / static_cast<double>(col.size());
      double ss = 0.0;
      for (double x : col) ss += (x - mean) * (x - mean);
      center.push_back(mean);
      spread.push_back(std::max(std::sqrt(ss / static_cast<double>(col.size())), kSpreadFloor));
    } else {
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      center.push_back(*lo);
      spread.push_back(std::max(*hi - *lo, kSpreadFloor));
    }
  }
  return Scaler(kind, frame.sensor_names(), std::move(center), std::move(spread));
}

namespace {

void check_sensors(const SensorFrame& frame, const Scaler& scaler) {
  if (frame.sensor_names() != scaler.sensor_names())
    fail(ErrorCode::invalid_argument, "scaler was fitted on a different sensor set");
}

}  // namespace

SensorFrame apply_scaler(const SensorFrame& frame, const Scaler& scaler) {
  check_sensors(frame, scaler);
  std::vector<std::vector<double>> cols(frame.sensor_count());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    cols[i].reserve(frame.length());
    for (double x : frame.column(i)) cols[i].push_back(scaler.apply(i, x));
  }
  return frame.with_columns(std::move(cols));
}

SensorFrame invert_scaler(const SensorFrame& frame, const Scaler& scaler) {
  check_sensors(frame, scaler);
  std::vector<std::vector<double>> cols(frame.sensor_count());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    cols[i].reserve(frame.length());
    for (double x : frame.column(i)) cols[i].push_back(scaler.invert(i, x));
  }
  return frame.with_columns(std::move(cols));
}

std::string to_string(ScalerKind kind) { return kind == ScalerKind::standard ? "standard" : "minmax"; }

ScalerKind scaler_kind_from_string(const std::string& text) {
  if (text == "standard") return ScalerKind::standard;
  if (text == "minmax") return ScalerKind::minmax;
  fail(ErrorCode::invalid_argument, "unknown scaler '" + text + "' (expected standard|minmax)");
}

}  // namespace qw
