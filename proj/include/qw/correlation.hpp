#pragma once

#include <span>
#include <vector>

namespace qw {

/// Tolerance under which two zero-variance vectors count as identical.
inline constexpr double kDegenerateEqualityTol = 1e-9;

/// Absolute Pearson correlation across the components of two equal-length
/// vectors. If either vector is constant the result is 1 when the vectors
/// agree componentwise within kDegenerateEqualityTol and 0 otherwise.
double abs_corr(std::span<const double> a, std::span<const double> b);

/// A vector prepared for repeated correlation queries: centered and scaled to
/// unit norm once, so each query is a dot product.
class CorrelationProbe {
 public:
  CorrelationProbe() = default;
  explicit CorrelationProbe(std::span<const double> values);

  std::size_t size() const { return raw_.size(); }
  bool constant() const { return constant_; }
  double abs_corr(const CorrelationProbe& other) const;

 private:
  std::vector<double> raw_;
  std::vector<double> unit_;
  bool constant_ = true;
};

}  // namespace qw
