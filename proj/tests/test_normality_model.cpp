#include <doctest.h>

#include <random>

#include "qw/correlation.hpp"
#include "qw/error.hpp"
#include "qw/model_io.hpp"
#include "qw/normality_model.hpp"
#include "reference/brute_force.hpp"
#include "support.hpp"

using namespace qw;

TEST_CASE("transition pairs") {
  const std::vector<int> l{0, 1, 2};
  const auto t = compute_transitions(l, 1);
  REQUIRE(t.size() == 2);
  CHECK(t[0].second == Transition{0, 1});
  CHECK(t[1].second == Transition{1, 2});
  const std::vector<int> flat(10, 3);
  const auto u = compute_transitions(flat, 4);
  CHECK(u.size() == 6);
  for (const auto& [i, c] : u) CHECK(c == Transition{3, 3});
  CHECK_THROWS_AS(compute_transitions(flat, 10), Error);
}

TEST_CASE("configuration vectors") {
  const auto f = qwtest::make_frame({{1, 2}, {10, 20}});
  CHECK(extract_configuration(f, 0, 1, 2).values == std::vector<double>{1, 2, 20});
  CHECK(extract_configuration(f, 1, 0, 1).values == std::vector<double>{1, 10});
  CHECK_THROWS_AS(extract_configuration(f, 0, 0, 2), Error);
  std::vector<double> c(40, 1.0);
  const auto g = qwtest::make_frame({c, c});
  CHECK(extract_configuration(g, 0, 30, 20).values.size() == 21);
}

TEST_CASE("absolute correlation") {
  const std::vector<double> a{1, 2, 3}, b{3, 2, 1}, k{2, 2, 2};
  CHECK(abs_corr(a, a) == doctest::Approx(1.0));
  CHECK(abs_corr(a, b) == doctest::Approx(1.0));
  CHECK(abs_corr(k, a) == 0.0);
  CHECK(abs_corr(k, k) == 1.0);
  CHECK(abs_corr(k, std::vector<double>{2, 2, 2.5}) == 0.0);
  CHECK_THROWS_AS(abs_corr(a, std::vector<double>{1, 2}), Error);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x(2 + rng() % 30), y;
    for (auto& v : x) v = n(rng);
    for (double v : x) y.push_back(n(rng) + 0.5 * v);
    CHECK(std::abs(abs_corr(x, y) - ref::pearson_abs(x, y)) < 1e-12);
  }
}

TEST_CASE("hyper-parameter validation") {
  HyperParams h;
  h.eta = 1.2;
  try {
    h.validate();
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
    CHECK(std::string(e.what()).find("η ∈ ]0,1[") != std::string::npos);
  }
  h.eta = 0.0;
  CHECK_THROWS_AS(h.validate(), Error);
  h = {};
  h.n_levels = 1;
  CHECK_THROWS_AS(h.validate(), Error);
  h = {};
  h.n_clusters = 0;
  CHECK_THROWS_AS(h.validate(), Error);
  const auto f = qwtest::make_frame({{1, 2, 3, 4}});
  HyperParams ok;
  ok.delta = 5;
  CHECK_THROWS_AS(fit(f, {0, 4}, ok), Error);
}

TEST_CASE("toy frame: 2 sensors, 30 samples, n_q=2, delta=2 matches the brute-force reference") {
  std::mt19937_64 rng(30);
  const auto cols = qwtest::random_columns(rng, 2, 30, 0);
  HyperParams h;
  h.n_levels = 2;
  h.delta = 2;
  h.eta = 0.95;
  const auto m = fit(qwtest::make_frame(cols), {0, 30}, h);
  const auto r = ref::fit(cols, 0, 30, 2, 2, 0.95);
  for (std::size_t i = 0; i < 2; ++i) {
    std::set<ref::Key> np1;
    for (const auto& c : m.sensors[i].transitions) np1.insert({c.from, c.to});
    CHECK(np1 == r.sensors[i].np1);
    for (const auto& [c, reps] : m.sensors[i].representatives) {
      const auto& want = r.sensors[i].np3.at({c.from, c.to});
      REQUIRE(reps.size() == want.size());
      for (std::size_t k = 0; k < reps.size(); ++k) CHECK(reps[k].timestamp == want[k].t);
    }
  }
}

TEST_CASE("eta close to one keeps every configuration") {
  std::mt19937_64 rng(8);
  const auto f = qwtest::make_frame(qwtest::random_columns(rng, 2, 300, 0));
  HyperParams h;
  h.n_levels = 4;
  h.delta = 5;
  h.eta = 1.0 - 1e-15;
  const auto m = fit(f, {0, 300}, h);
  const auto scaled = apply_scaler(f, m.scaler);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto obs = observe_sensor(scaled, i, m.quantizers[i], {0, 300}, 5);
    for (const auto& [c, all] : obs.configurations) CHECK(m.sensors[i].representatives.at(c) == all);
  }
}

TEST_CASE("property: bounds attained and greedy cover") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = qwtest::make_frame(qwtest::random_columns(rng, 1 + rng() % 3, 400, static_cast<int>(trial % 2)));
    HyperParams h;
    h.n_levels = 3 + static_cast<int>(rng() % 5);
    h.delta = 2 + static_cast<int>(rng() % 6);
    h.eta = 0.7 + 0.05 * static_cast<double>(rng() % 5);
    const IndexRange train{0, 250};
    const auto m = fit(f, train, h);
    const auto scaled = apply_scaler(f, m.scaler);
    for (std::size_t i = 0; i < f.sensor_count(); ++i) {
      const auto obs = observe_sensor(scaled, i, m.quantizers[i], train, h.delta);
      CHECK(obs.transitions == m.sensors[i].transitions);
      for (const auto& [c, all] : obs.configurations) {
        const auto& b = m.sensors[i].bounds.at(c);
        for (std::size_t j = 0; j < b.lower.size(); ++j) {
          bool lo = false, hi = false;
          for (const auto& w : all) {
            lo = lo || w.values[j] == b.lower[j];
            hi = hi || w.values[j] == b.upper[j];
          }
          CHECK(lo);
          CHECK(hi);
        }
        const auto& reps = m.sensors[i].representatives.at(c);
        for (const auto& w : all) {
          double best = 0.0;
          for (const auto& r : reps) best = std::max(best, abs_corr(w.values, r.values));
          CHECK(best >= h.eta);
        }
      }
    }
  }
}

TEST_CASE("k-means reduction") {
  std::vector<ConfigurationVector> three{{{1, 2, 3}, 0, 1}, {{2, 2, 2}, 0, 2}, {{0, 1, 0}, 0, 3}};
  CHECK(kmeans_reduce(three, 5) == three);
  const auto one = kmeans_reduce(three, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].values[0] == doctest::Approx(1.0));
  CHECK(one[0].values[1] == doctest::Approx(5.0 / 3.0));
  CHECK(one[0].values[2] == doctest::Approx(5.0 / 3.0));
  CHECK(one[0].timestamp == kNoTimestamp);
  CHECK_THROWS_AS(kmeans_reduce(three, 0), Error);
}

TEST_CASE("n_w caps the representative scalar count") {
  std::mt19937_64 rng(4);
  for (int nw : {1, 2, 5}) {
    const auto f = qwtest::make_frame(qwtest::random_columns(rng, 2, 600, 0));
    HyperParams h;
    h.n_levels = 4;
    h.delta = 6;
    h.eta = 0.99;
    h.n_clusters = nw;
    const auto m = fit(f, {0, 600}, h);
    CHECK(np3_scalar_count(m) <= np3_scalar_bound(m));
    CHECK(np3_scalar_bound(m) == 7u * static_cast<std::size_t>(nw) * 2u * 16u);
    for (const auto& sn : m.sensors)
      for (const auto& [c, reps] : sn.representatives) CHECK(reps.size() <= static_cast<std::size_t>(nw));
  }
}

TEST_CASE("percentile bounds sit inside minmax bounds") {
  std::mt19937_64 rng(9);
  const auto f = qwtest::make_frame(qwtest::random_columns(rng, 2, 800, 0));
  HyperParams h;
  h.n_levels = 3;
  h.delta = 4;
  const auto a = fit(f, {0, 800}, h);
  h.bounds = BoundsMode::percentile;
  h.bounds_percentile = 5.0;
  const auto b = fit(f, {0, 800}, h);
  for (std::size_t i = 0; i < 2; ++i)
    for (const auto& [c, bb] : b.sensors[i].bounds)
      for (std::size_t j = 0; j < bb.lower.size(); ++j) {
        CHECK(bb.lower[j] >= a.sensors[i].bounds.at(c).lower[j]);
        CHECK(bb.upper[j] <= a.sensors[i].bounds.at(c).upper[j]);
      }
}

TEST_CASE("model snapshot round trip and schema check") {
  std::mt19937_64 rng(12);
  const auto f = qwtest::make_frame(qwtest::random_columns(rng, 2, 300, 0));
  HyperParams h;
  h.n_levels = 5;
  h.delta = 3;
  h.n_clusters = 3;
  auto m = fit(f, {0, 300}, h);
  m.version = 7;
  m.normalizers = Normalizers{50, 1.0, {0.1, 0.2}, {0.3, 1e-12}};
  const auto text = serialize_model(m);
  CHECK(deserialize_model(text) == m);
  CHECK(serialize_model(deserialize_model(text)) == text);

  qwtest::TempDir dir("model");
  save_model(m, dir.file("m.json"));
  CHECK(load_model(dir.file("m.json")) == m);

  std::string bad = text;
  const auto pos = bad.find("\"schema_version\": 1");
  REQUIRE(pos != std::string::npos);
  bad.replace(pos, 19, "\"schema_version\": 99");
  try {
    deserialize_model(bad);
    FAIL("expected version mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::version_mismatch);
  }
  CHECK_THROWS_AS(deserialize_model("{not json"), Error);
  CHECK_THROWS_AS(deserialize_model("{\"schema_version\": 1}"), Error);
  CHECK_THROWS_AS(load_model(dir.file("missing.json")), Error);
}
