#include "qw/correlation.hpp"

#include <algorithm>
#include <cmath>

#include "qw/error.hpp"

namespace qw {

CorrelationProbe::CorrelationProbe(std::span<const double> values) : raw_(values.begin(), values.end()) {
  require(raw_.size() >= 2, "correlation needs vectors of length >= 2");
  const auto [lo, hi] = std::minmax_element(raw_.begin(), raw_.end());
  constant_ = *lo == *hi;
  if (constant_) return;
  double mean = 0.0;
  for (double x : raw_) mean += x;
  mean /= static_cast<double>(raw_.size());
  unit_.resize(raw_.size());
  double norm2 = 0.0;
  for (std::size_t j = 0; j < raw_.size(); ++j) {
    unit_[j] = raw_[j] - mean;
    norm2 += unit_[j] * unit_[j];
  }
  if (!(norm2 > 0.0)) {
    // Components differ only below the resolution of the mean.
    constant_ = true;
    unit_.clear();
    return;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : unit_) x *= inv;
}

double CorrelationProbe::abs_corr(const CorrelationProbe& other) const {
  require(raw_.size() == other.raw_.size(), "correlation of vectors with different lengths");
  if (constant_ || other.constant_) {
    for (std::size_t j = 0; j < raw_.size(); ++j)
      if (std::abs(raw_[j] - other.raw_[j]) > kDegenerateEqualityTol) return 0.0;
    return 1.0;
  }
  double dot = 0.0;
  for (std::size_t j = 0; j < unit_.size(); ++j) dot += unit_[j] * other.unit_[j];
  return std::min(std::abs(dot), 1.0);
}

double abs_corr(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "correlation of vectors with different lengths");
  return CorrelationProbe(a).abs_corr(CorrelationProbe(b));
}

}  // namespace qw
