#include <doctest.h>

#include <cmath>
#include <random>

#include "qw/error.hpp"
#include "qw/quantizer.hpp"
#include "reference/brute_force.hpp"

using namespace qw;

TEST_CASE("cut points of 1..100 with 4 levels") {
  std::vector<double> v;
  for (int k = 1; k <= 100; ++k) v.push_back(k);
  const auto q = Quantizer::fit(v, 4);
  REQUIRE(q.cut_points().size() == 3);
  CHECK(q.cut_points()[0] == doctest::Approx(25.75));
  CHECK(q.cut_points()[1] == doctest::Approx(50.5));
  CHECK(q.cut_points()[2] == doctest::Approx(75.25));
}

TEST_CASE("constant values collapse to one level") {
  const std::vector<double> v(10, 3.0);
  const auto q = Quantizer::fit(v, 3);
  CHECK(q.cut_points() == std::vector<double>{3.0, 3.0});
  for (int l : q.levels(v)) CHECK(l == 0);
}

TEST_CASE("tails and the half-open boundary") {
  const Quantizer q({1.0, 2.0});
  CHECK(q.level(-100) == 0);
  CHECK(q.level(100) == 2);
  CHECK(q.level(1.0) == 0);
  CHECK(q.level(1.0000001) == 1);
  CHECK(q.level(2.0) == 1);
  CHECK_THROWS_AS(q.level(std::nan("")), Error);
}

TEST_CASE("series quantization") {
  const Quantizer q({0.0});
  CHECK(q.levels(std::vector<double>{}).empty());
  for (int l : q.levels(std::vector<double>(5, 0.7))) CHECK(l == 1);
}

TEST_CASE("invalid quantizer requests") {
  CHECK_THROWS_AS(Quantizer::fit(std::vector<double>{1, 2}, 1), Error);
  CHECK_THROWS_AS(Quantizer::fit(std::vector<double>{}, 4), Error);
  CHECK_THROWS_AS(Quantizer(std::vector<double>{2.0, 1.0}), Error);
}

TEST_CASE("property: occupancy, monotonicity, affine invariance, oracle agreement") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t len = 20 + rng() % 500;
    const int nq = 2 + static_cast<int>(rng() % 30);
    std::vector<double> v(len);
    for (auto& x : v) x = n(rng);
    const auto q = Quantizer::fit(v, nq);

    std::vector<double> cuts;
    for (int k = 1; k < nq; ++k) cuts.push_back(ref::quantile(v, static_cast<double>(k) / nq));
    CHECK(q.cut_points() == cuts);
    for (double x : v) CHECK(q.level(x) == ref::level_of(cuts, x));

    std::vector<std::size_t> occ(static_cast<std::size_t>(nq), 0);
    for (int l : q.levels(v)) ++occ[static_cast<std::size_t>(l)];
    const double expect = static_cast<double>(len) / nq;
    for (auto c : occ) CHECK(std::abs(static_cast<double>(c) - expect) <= 2.0);

    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 1; k < sorted.size(); ++k) CHECK(q.level(sorted[k - 1]) <= q.level(sorted[k]));

    // a power of two keeps the affine map exact
    std::vector<double> w(len);
    for (std::size_t k = 0; k < len; ++k) w[k] = 4.0 * v[k] + 1.0;
    const auto qw2 = Quantizer::fit(w, nq);
    for (std::size_t k = 0; k < len; ++k) CHECK(qw2.level(w[k]) == q.level(v[k]));
  }
}
