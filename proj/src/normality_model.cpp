#include "qw/normality_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qw/correlation.hpp"
#include "qw/error.hpp"
#include "qw/parallel.hpp"

namespace qw {

std::size_t SensorNormality::representative_count() const {
  std::size_t n = 0;
  for (const auto& [c, reps] : representatives) n += reps.size();
  return n;
}

void HyperParams::validate() const {
  require(n_levels >= 2, "n_q must satisfy n_q >= 2 (got " + std::to_string(n_levels) + ")");
  require(delta >= 1, "delta must satisfy Δ >= 1 (got " + std::to_string(delta) + ")");
  require(eta > 0.0 && eta < 1.0, "eta must satisfy η ∈ ]0,1[ (got " + format_double(eta) + ")");
  if (n_clusters)
    require(*n_clusters >= 1, "n_w must be >= 1 (got " + std::to_string(*n_clusters) + ")");
  if (bounds == BoundsMode::percentile)
    require(bounds_percentile > 0.0 && bounds_percentile < 50.0,
            "bounds percentile must lie in ]0,50[ percent");
}

std::vector<std::pair<std::size_t, Transition>> compute_transitions(std::span<const int> levels,
                                                                    int delta) {
  require(delta >= 1, "delta must be >= 1");
  const auto d = static_cast<std::size_t>(delta);
  require(levels.size() > d, "sequence of length " + std::to_string(levels.size()) +
                                 " is shorter than delta + 1 = " + std::to_string(d + 1));
  std::vector<std::pair<std::size_t, Transition>> out;
  out.reserve(levels.size() - d);
  for (std::size_t t = 0; t + d < levels.size(); ++t) out.push_back({t, {levels[t], levels[t + d]}});
  return out;
}

ConfigurationVector extract_configuration(const SensorFrame& scaled, std::size_t sensor,
                                          std::size_t t, int delta) {
  require(delta >= 1, "delta must be >= 1");
  require(sensor < scaled.sensor_count(), "sensor index out of range");
  require(t < scaled.length(), "timestamp index out of range");
  const auto d = static_cast<std::size_t>(delta);
  require(t + 1 >= d, "configuration vector at t=" + std::to_string(t) + " needs " +
                          std::to_string(d - 1) + " earlier samples");
  ConfigurationVector w;
  w.sensor = sensor;
  w.timestamp = t;
  w.values.reserve(d - 1 + scaled.sensor_count());
  const auto own = scaled.column(sensor);
  for (std::size_t k = t + 1 - d; k < t; ++k) w.values.push_back(own[k]);
  for (std::size_t i = 0; i < scaled.sensor_count(); ++i) w.values.push_back(scaled.value(i, t));
  return w;
}

SensorObservations observe_sensor(const SensorFrame& scaled, std::size_t sensor,
                                  const Quantizer& quantizer, IndexRange range, int delta) {
  const auto d = static_cast<std::size_t>(delta);
  require(range.end <= scaled.length(), "range exceeds the frame");
  require(range.size() > d, "range of " + std::to_string(range.size()) +
                                " samples is shorter than delta + 1 = " + std::to_string(d + 1));
  const auto levels = quantizer.levels(scaled.column(sensor).subspan(range.begin, range.size()));
  SensorObservations obs;
  for (const auto& [offset, c] : compute_transitions(levels, delta)) {
    const std::size_t t = range.begin + offset;
    obs.transitions.insert(c);
    if (t + 1 >= d) obs.configurations[c].push_back(extract_configuration(scaled, sensor, t, delta));
  }
  return obs;
}

std::vector<ConfigurationVector> select_representatives(
    const std::vector<ConfigurationVector>& candidates, double eta) {
  std::vector<ConfigurationVector> kept;
  std::vector<CorrelationProbe> probes;
  for (const auto& w : candidates) {
    CorrelationProbe p(w.values);
    bool redundant = false;
    for (const auto& k : probes) {
      if (p.abs_corr(k) >= eta) {
        redundant = true;
        break;
      }
    }
    if (!redundant) {
      kept.push_back(w);
      probes.push_back(std::move(p));
    }
  }
  return kept;
}

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

constexpr int kKMeansMaxIterations = 50;
constexpr std::uint64_t kKMeansSeed = 0;

}  // namespace

std::vector<ConfigurationVector> kmeans_reduce(const std::vector<ConfigurationVector>& vectors,
                                               int n_clusters) {
  require(n_clusters >= 1, "n_w must be >= 1 (got " + std::to_string(n_clusters) + ")");
  const auto k = static_cast<std::size_t>(n_clusters);
  if (vectors.size() <= k) return vectors;
  const std::size_t n = vectors.size();

  // k-means++ seeding
  std::mt19937_64 rng(kKMeansSeed);
  std::vector<std::vector<double>> centroids;
  centroids.push_back(vectors[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)].values);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(vectors[i].values, centroids.back()));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < n; ++pick) {
        r -= nearest[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    centroids.push_back(vectors[pick].values);
  }

  std::vector<std::size_t> assign(n, k);
  for (int iter = 0; iter < kKMeansMaxIterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(vectors[i].values, centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = squared_distance(vectors[i].values, centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    const std::size_t dim = centroids[0].size();
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t j = 0; j < dim; ++j) sums[assign[i]][j] += vectors[i].values[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t j = 0; j < dim; ++j) centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
  }

  // Drop centroids that ended up without members (duplicate seeds).
  std::vector<bool> used(k, false);
  for (std::size_t a : assign) used[a] = true;
  std::vector<ConfigurationVector> out;
  for (std::size_t c = 0; c < k; ++c) {
    if (!used[c]) continue;
    out.push_back({std::move(centroids[c]), vectors.front().sensor, kNoTimestamp});
  }
  return out;
}

Bounds compute_bounds(const std::vector<ConfigurationVector>& vectors, BoundsMode mode,
                      double percentile) {
  require(!vectors.empty(), "bounds of an empty configuration set");
  const std::size_t dim = vectors.front().values.size();
  Bounds b{std::vector<double>(dim), std::vector<double>(dim)};
  std::vector<double> column(vectors.size());
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t k = 0; k < vectors.size(); ++k) column[k] = vectors[k].values[j];
    if (mode == BoundsMode::minmax) {
      const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
      b.lower[j] = *lo;
      b.upper[j] = *hi;
    } else {
      std::sort(column.begin(), column.end());
      b.lower[j] = quantile_sorted(column, percentile / 100.0);
      b.upper[j] = quantile_sorted(column, 1.0 - percentile / 100.0);
    }
  }
  return b;
}

NormalityModel fit(const SensorFrame& frame, IndexRange train_range, const HyperParams& hyper) {
  hyper.validate();
  require(train_range.end <= frame.length(), "training range exceeds the frame");
  require(train_range.size() > static_cast<std::size_t>(hyper.delta),
          "training range of " + std::to_string(train_range.size()) +
              " samples is shorter than delta + 1");
  require(static_cast<std::size_t>(hyper.delta) + frame.sensor_count() >= 3,
          "configuration vectors need delta + N_s - 1 >= 2 components to correlate");

  NormalityModel model;
  model.hyper = hyper;
  model.sensor_names = frame.sensor_names();
  model.train_range = train_range;
  model.scaler = fit_scaler(frame, train_range, hyper.scaler);
  const SensorFrame scaled = apply_scaler(frame, model.scaler);

  const std::size_t ns = frame.sensor_count();
  model.quantizers.resize(ns);
  model.sensors.resize(ns);
  parallel_for(ns, 0, [&](std::size_t i) {
    const auto train_values = scaled.column(i).subspan(train_range.begin, train_range.size());
    model.quantizers[i] = Quantizer::fit(train_values, hyper.n_levels);
    auto obs = observe_sensor(scaled, i, model.quantizers[i], train_range, hyper.delta);
    SensorNormality& sn = model.sensors[i];
    sn.transitions = std::move(obs.transitions);
    for (const auto& [c, configs] : obs.configurations) {
      sn.bounds[c] = compute_bounds(configs, hyper.bounds, hyper.bounds_percentile);
      auto reps = select_representatives(configs, hyper.eta);
      if (hyper.n_clusters) reps = kmeans_reduce(reps, *hyper.n_clusters);
      sn.representatives[c] = std::move(reps);
    }
  });
  return model;
}

std::size_t np3_scalar_count(const NormalityModel& model) {
  std::size_t n = 0;
  for (const auto& sn : model.sensors)
    for (const auto& [c, reps] : sn.representatives)
      for (const auto& w : reps) n += w.values.size();
  return n;
}

std::size_t np3_scalar_bound(const NormalityModel& model) {
  require(model.hyper.n_clusters.has_value(), "the NP3 bound needs n_w");
  const auto nq = static_cast<std::size_t>(model.hyper.n_levels);
  return model.config_length() * static_cast<std::size_t>(*model.hyper.n_clusters) *
         model.sensor_count() * nq * nq;
}

std::string to_string(BoundsMode mode) { return mode == BoundsMode::minmax ? "minmax" : "percentile"; }

BoundsMode bounds_mode_from_string(const std::string& text) {
  if (text == "minmax") return BoundsMode::minmax;
  if (text == "percentile") return BoundsMode::percentile;
  fail(ErrorCode::invalid_argument, "unknown bounds mode '" + text + "' (expected minmax|percentile)");
}

}  // namespace qw
