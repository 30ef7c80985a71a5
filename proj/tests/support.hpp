#pragma once
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "qw/timeseries.hpp"
#include "tempdir.hpp"

namespace qwtest {

inline qw::SensorFrame make_frame(std::vector<std::vector<double>> columns, std::vector<int> labels = {}) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < columns.size(); ++i) names.push_back("s" + std::to_string(i));
  std::vector<double> ts(columns.at(0).size());
  for (std::size_t t = 0; t < ts.size(); ++t) ts[t] = static_cast<double>(t);
  std::optional<std::vector<int>> lab;
  if (!labels.empty()) lab = std::move(labels);
  return qw::SensorFrame(std::move(names), std::move(ts), std::move(columns), std::move(lab));
}

// A few noisy oscillators; `kind` 1 rounds values to create ties and flats.
inline std::vector<std::vector<double>> random_columns(std::mt19937_64& rng, std::size_t ns, std::size_t len,
                                                       int kind) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.05, 0.5);
  std::vector<std::vector<double>> cols(ns, std::vector<double>(len));
  for (std::size_t i = 0; i < ns; ++i) {
    const double f = u(rng), a = 1.0 + 3.0 * u(rng);
    for (std::size_t t = 0; t < len; ++t) {
      double v = a * std::sin(f * static_cast<double>(t)) + 0.3 * noise(rng);
      if (kind == 1) v = std::round(v * 2.0) / 2.0;
      cols[i][t] = v;
    }
  }
  return cols;
}


}  // namespace qwtest
