#pragma once

#include <span>
#include <vector>

namespace qw {

/// Empirical quantile of `sorted` at probability p in [0, 1], interpolating
/// linearly between order statistics (h = (n - 1) p).
double quantile_sorted(std::span<const double> sorted, double p);

/// n-level quantizer built from the interior empirical quantiles of scaled
/// training values. Level k covers ]cut[k-1], cut[k]]; ties at a cut point go
/// to the lower level.
class Quantizer {
 public:
  Quantizer() = default;
  explicit Quantizer(std::vector<double> cut_points);

  static Quantizer fit(std::span<const double> values, int n_levels);

  int n_levels() const { return static_cast<int>(cuts_.size()) + 1; }
  const std::vector<double>& cut_points() const { return cuts_; }

  int level(double x) const;
  std::vector<int> levels(std::span<const double> xs) const;

  friend bool operator==(const Quantizer&, const Quantizer&) = default;

 private:
  std::vector<double> cuts_;
};

}  // namespace qw
