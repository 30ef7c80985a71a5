#pragma once
#include <cmath>
#include <random>
#include <string>

#include "qw/evaluation.hpp"
#include "reference/brute_force.hpp"

namespace ref {

struct MetricSuiteResult {
  int sets = 0;
  double max_error = 0.0;
  double max_full_pauc_gap = 0.0;  // |partial_auc(1) - roc_auc|
  int threshold_mismatches = 0;
  std::string first_problem;
};

// `count` random score/label sets of size 2..40 with heavy ties.
inline MetricSuiteResult run_metric_suite(std::uint64_t seed, int count) {
  MetricSuiteResult r;
  std::mt19937_64 rng(seed);
  for (int k = 0; k < count; ++k) {
    const std::size_t n = 2 + rng() % 39;
    const int distinct = 1 + static_cast<int>(rng() % 12);
    Series s(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % static_cast<unsigned>(distinct)) / 3.0;
      l[i] = static_cast<int>(rng() % 2);
    }
    l[0] = 0;
    l[1] = 1;
    const double fpr = std::vector<double>{0.1, 0.25, 0.5, 1.0}[rng() % 4];
    const auto track = [&](double got, double want, const char* what) {
      const double e = std::fabs(got - want);
      if (e > r.max_error) {
        r.max_error = e;
        if (e > 1e-12 && r.first_problem.empty()) r.first_problem = std::string(what) + " set " + std::to_string(k);
      }
    };
    track(qw::roc_auc(s, l), roc_auc(s, l), "roc_auc");
    track(qw::partial_auc(s, l, fpr), partial_auc(s, l, fpr, true), "pauc");
    track(qw::partial_auc(s, l, fpr, qw::PaucScale::raw), partial_auc(s, l, fpr, false), "raw pauc");
    const auto f = qw::best_f1(s, l);
    const auto [bf, bt] = best_f1(s, l);
    track(f.f1, bf, "best_f1");
    if (f.threshold != bt) ++r.threshold_mismatches;
    r.max_full_pauc_gap =
        std::max(r.max_full_pauc_gap, std::fabs(qw::partial_auc(s, l, 1.0, qw::PaucScale::raw) - qw::roc_auc(s, l)));
    ++r.sets;
  }
  return r;
}

}  // namespace ref
