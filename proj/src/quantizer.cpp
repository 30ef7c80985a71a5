#include "qw/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qw/error.hpp"

namespace qw {

double quantile_sorted(std::span<const double> sorted, double p) {
  require(!sorted.empty(), "quantile of an empty sequence");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

Quantizer::Quantizer(std::vector<double> cut_points) : cuts_(std::move(cut_points)) {
  require(!cuts_.empty(), "a quantizer needs at least one cut point (n_q >= 2)");
  require(std::is_sorted(cuts_.begin(), cuts_.end()), "quantizer cut points must be non-decreasing");
}

Quantizer Quantizer::fit(std::span<const double> values, int n_levels) {
  require(n_levels >= 2, "n_q must be >= 2 (got " + std::to_string(n_levels) + ")");
  require(!values.empty(), "cannot fit a quantizer on an empty sequence");
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted) require(!std::isnan(v), "quantizer input contains NaN");
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  cuts.reserve(static_cast<std::size_t>(n_levels - 1));
  for (int k = 1; k < n_levels; ++k)
    cuts.push_back(quantile_sorted(sorted, static_cast<double>(k) / n_levels));
  return Quantizer(std::move(cuts));
}

int Quantizer::level(double x) const {
  require(!std::isnan(x), "cannot quantize NaN");
  return static_cast<int>(std::lower_bound(cuts_.begin(), cuts_.end(), x) - cuts_.begin());
}

std::vector<int> Quantizer::levels(std::span<const double> xs) const {
  std::vector<int> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(level(x));
  return out;
}

}  // namespace qw
