#include <doctest.h>

#include <random>

#include "qw/error.hpp"
#include "qw/timeseries.hpp"
#include "support.hpp"

using namespace qw;

TEST_CASE("csv with header parses into a frame") {
  const auto f = parse_csv("timestamp,a,b\n0,1,2\n1,3,4\n2,5,6\n");
  CHECK(f.length() == 3);
  CHECK(f.sensor_count() == 2);
  CHECK(f.value(1, 2) == 6.0);
  CHECK_FALSE(f.has_labels());
}

TEST_CASE("duplicate timestamps are rejected") {
  CHECK_THROWS_AS(parse_csv("timestamp,a\n0,1\n0,2\n"), Error);
  try {
    parse_csv("timestamp,a\n0,1\n0,2\n");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::format);
    CHECK(std::string(e.what()).find("increasing") != std::string::npos);
  }
}

TEST_CASE("malformed csv inputs") {
  CHECK_THROWS_AS(parse_csv(""), Error);
  CHECK_THROWS_AS(parse_csv("a,b\n1,2\n"), Error);                   // no timestamp column
  CHECK_THROWS_AS(parse_csv("timestamp,a\n0,1,2\n"), Error);         // ragged
  CHECK_THROWS_AS(parse_csv("timestamp,a\n0,x\n"), Error);           // not a number
  CHECK_THROWS_AS(parse_csv("timestamp,a,label\n0,1,2\n"), Error);   // bad label
  CHECK_THROWS_AS(parse_csv("timestamp,a\n"), Error);                // no rows
}

TEST_CASE("schema selects sensors and labels") {
  CsvSchema s;
  s.sensors = {"b"};
  const auto f = parse_csv("timestamp,a,b,label\n0,1,2,0\n1,3,4,1\n", s);
  CHECK(f.sensor_names() == std::vector<std::string>{"b"});
  REQUIRE(f.has_labels());
  CHECK(f.labels()[1] == 1);
}

TEST_CASE("save then load is bit-exact") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  std::vector<std::vector<double>> cols(2, std::vector<double>(200));
  for (auto& c : cols)
    for (auto& v : c) v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
  cols[0][0] = 0.1;
  cols[0][1] = -0.0;
  cols[1][5] = 5e-324;
  std::vector<int> labels(200, 0);
  labels[7] = 1;
  const auto f = qwtest::make_frame(cols, labels);
  qwtest::TempDir dir("csv");
  save_csv(f, dir.file("a.csv"));
  const auto g = load_csv(dir.file("a.csv"));
  CHECK(g == f);
  save_csv(g, dir.file("b.csv"));
  CHECK(format_csv(load_csv(dir.file("b.csv"))) == format_csv(f));
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e300, -2.5e-308, 123456789.125}) CHECK(parse_double(format_double(v)) == v);
}

TEST_CASE("slice rebases intervals and labels") {
  const auto f = qwtest::make_frame({{1, 2, 3, 4, 5}}, {0, 0, 1, 1, 0})
                     .with_intervals({{0, 2, "normal"}, {2, 4, "fault:x"}, {4, 5, "normal"}});
  const auto s = f.slice({1, 4});
  CHECK(s.length() == 3);
  CHECK(s.labels()[1] == 1);
  REQUIRE(s.intervals().size() == 2);
  CHECK(s.intervals()[0] == Interval{0, 1, "normal"});
  CHECK(s.intervals()[1] == Interval{1, 3, "fault:x"});
}

TEST_CASE("scaler: constant column gets the floor spread and scales to zero") {
  const auto f = qwtest::make_frame({{5, 5, 5}});
  const auto sc = fit_scaler(f, {0, 3});
  CHECK(sc.center()[0] == 5.0);
  CHECK(sc.spread()[0] == kSpreadFloor);
  const auto g = apply_scaler(f, sc);
  for (double v : g.column(0)) CHECK(v == 0.0);
}

TEST_CASE("scaler: [0,2] has center 1 and spread 1") {
  const auto sc = fit_scaler(qwtest::make_frame({{0, 2}}), {0, 2});
  CHECK(sc.center()[0] == 1.0);
  CHECK(sc.spread()[0] == 1.0);
  const auto g = apply_scaler(qwtest::make_frame({{0, 2}}), sc);
  CHECK(g.value(0, 0) == -1.0);
  CHECK(g.value(0, 1) == 1.0);
}

TEST_CASE("scaler: per-sensor independence, centering and round trip") {
  std::mt19937_64 rng(1);
  const auto f = qwtest::make_frame(qwtest::random_columns(rng, 2, 400, 0));
  const auto sc = fit_scaler(f, {0, 200});
  CHECK(sc.center()[0] != sc.center()[1]);
  const auto g = apply_scaler(f, sc);
  for (std::size_t i = 0; i < 2; ++i) {
    double m = 0.0;
    for (std::size_t t = 0; t < 200; ++t) m += g.value(i, t);
    CHECK(std::abs(m / 200.0) < 1e-9);
  }
  const auto back = invert_scaler(g, sc);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t t = 0; t < f.length(); ++t)
      CHECK(std::abs(back.value(i, t) - f.value(i, t)) <= 1e-9 * std::max(1.0, std::abs(f.value(i, t))));
}

TEST_CASE("scaler ignores rows outside the training range") {
  std::mt19937_64 rng(2);
  auto cols = qwtest::random_columns(rng, 1, 100, 0);
  const auto a = fit_scaler(qwtest::make_frame(cols), {10, 50});
  for (std::size_t t = 50; t < 100; ++t) cols[0][t] = 1e9;
  for (std::size_t t = 0; t < 10; ++t) cols[0][t] = -1e9;
  const auto b = fit_scaler(qwtest::make_frame(cols), {10, 50});
  CHECK(a == b);
}

TEST_CASE("identity scaler leaves the frame unchanged") {
  const auto f = qwtest::make_frame({{1.5, -2, 3}});
  const Scaler id(ScalerKind::standard, {"s0"}, {0.0}, {1.0});
  CHECK(apply_scaler(f, id) == f);
}

TEST_CASE("minmax scaler and sensor mismatch") {
  const auto f = qwtest::make_frame({{2, 4, 6}});
  const auto sc = fit_scaler(f, {0, 3}, ScalerKind::minmax);
  CHECK(sc.center()[0] == 2.0);
  CHECK(sc.spread()[0] == 4.0);
  const auto other = qwtest::make_frame({{1, 2}, {3, 4}});
  CHECK_THROWS_AS(apply_scaler(other, sc), Error);
  CHECK_THROWS_AS(fit_scaler(f, {1, 1}), Error);
}
