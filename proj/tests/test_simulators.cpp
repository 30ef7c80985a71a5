#include <doctest.h>

#include <cmath>

#include "qw/error.hpp"
#include "qw/simulators.hpp"
#include "support.hpp"

using namespace qw;

namespace {

double decay_error(double dt) {
  std::array<double, 1> x{1.0};
  const auto steps = static_cast<int>(std::lround(1.0 / dt));
  for (int k = 0; k < steps; ++k) x = rk4_step<1>([](const std::array<double, 1>& y) { return std::array<double, 1>{-y[0]}; }, x, dt);
  return std::abs(x[0] - std::exp(-1.0));
}

// exp(A t) x0 by a long Taylor series
std::array<double, 2> expm_apply(const double A[2][2], double t, std::array<double, 2> x0) {
  std::array<double, 2> term = x0, sum = x0;
  for (int k = 1; k < 60; ++k) {
    const std::array<double, 2> next{(A[0][0] * term[0] + A[0][1] * term[1]) * t / k,
                                     (A[1][0] * term[0] + A[1][1] * term[1]) * t / k};
    term = next;
    sum[0] += term[0];
    sum[1] += term[1];
  }
  return sum;
}

}  // namespace

TEST_CASE("rk4: zero field and one decay step") {
  const std::array<double, 3> x{1, -2, 3};
  CHECK(rk4_step<3>([](const std::array<double, 3>&) { return std::array<double, 3>{}; }, x, 0.1) == x);
  const auto y = rk4_step<1>([](const std::array<double, 1>& v) { return std::array<double, 1>{-v[0]}; }, {1.0}, 0.01);
  CHECK(std::abs(y[0] - std::exp(-0.01)) < 1e-11);
  CHECK(y[0] == doctest::Approx(0.99004983).epsilon(1e-8));
  CHECK_THROWS_AS(rk4_step<1>([](const std::array<double, 1>& v) { return v; }, {1.0}, 0.0), Error);
  CHECK_THROWS_AS(rk4_step<1>([](const std::array<double, 1>&) { return std::array<double, 1>{NAN}; }, {1.0}, 0.1),
                  Error);
}

TEST_CASE("rk4: linear system against the matrix exponential") {
  const double A[2][2] = {{0.0, 1.0}, {-2.0, -0.3}};
  std::array<double, 2> x{1.0, 0.5};
  const auto f = [&](const std::array<double, 2>& v) {
    return std::array<double, 2>{A[0][0] * v[0] + A[0][1] * v[1], A[1][0] * v[0] + A[1][1] * v[1]};
  };
  for (int k = 0; k < 100; ++k) x = rk4_step<2>(f, x, 1e-3);
  const auto want = expm_apply(A, 0.1, {1.0, 0.5});
  CHECK(std::abs(x[0] - want[0]) < 1e-10);
  CHECK(std::abs(x[1] - want[1]) < 1e-10);

  // the type-erased variant agrees
  std::vector<double> v{1.0, 0.5};
  const DerivativeFn g = [&](std::span<const double> s, std::span<double> d) {
    d[0] = A[0][0] * s[0] + A[0][1] * s[1];
    d[1] = A[1][0] * s[0] + A[1][1] * s[1];
  };
  for (int k = 0; k < 100; ++k) v = rk4_step(g, v, 1e-3);
  CHECK(v[0] == x[0]);
  CHECK(v[1] == x[1]);
}

TEST_CASE("rk4 is fourth order") {
  for (double dt : {0.1, 0.05, 0.02}) {
    const double ratio = decay_error(dt) / decay_error(dt / 2.0);
    CHECK(ratio > 8.0);
    CHECK(ratio < 32.0);
  }
}

TEST_CASE("lorentz: schedule, labels, trace and determinism") {
  LorentzConfig c;
  c.steps_per_interval = 3000;
  c.seed = 9;
  const auto s = generate_lorentz(c);
  const auto& f = s.frame;
  CHECK(f.sensor_names() == std::vector<std::string>{"x1", "x3"});
  CHECK(f.length() == 18000);
  REQUIRE(f.intervals().size() == 6);
  int normal = 0;
  for (const auto& iv : f.intervals()) normal += iv.tag == "normal";
  CHECK(normal == 3);
  CHECK(f.intervals()[2].tag == "fault:sigma");
  CHECK(f.intervals()[4].tag == "fault:rho");
  CHECK(f.intervals()[5].tag == "fault:beta");

  std::size_t positives = 0;
  for (const auto& iv : f.intervals())
    for (std::size_t t = iv.begin; t < iv.end; ++t) {
      CHECK(f.labels()[t] == (iv.tag == "normal" ? 0 : 1));
      positives += f.labels()[t];
    }
  CHECK(positives == 9000);

  REQUIRE(s.trace_names == std::vector<std::string>{"sigma_ratio", "rho_ratio", "beta_ratio"});
  CHECK(s.trace[0][f.intervals()[2].begin + 10] == doctest::Approx(8.0 / 12.0));
  CHECK(s.trace[1][f.intervals()[4].begin] == doctest::Approx(26.0 / 28.0));
  CHECK(s.trace[2][f.intervals()[5].end - 1] == doctest::Approx(1.25));
  // labels line up with the parameter trace
  for (std::size_t t = 0; t < f.length(); t += 7) {
    const bool faulty = s.trace[0][t] != 1.0 || s.trace[1][t] != 1.0 || s.trace[2][t] != 1.0;
    CHECK(faulty == (f.labels()[t] == 1));
  }

  CHECK(generate_lorentz(c).frame == f);
  c.seed = 10;
  CHECK_FALSE(generate_lorentz(c).frame == f);
}

TEST_CASE("lorentz: nominal intervals start from different states and diverge") {
  LorentzConfig c;
  c.steps_per_interval = 3000;
  const auto f = generate_lorentz(c).frame;
  const auto sc = fit_scaler(f, {0, 3000});
  const auto g = apply_scaler(f, sc);
  const auto& iv = f.intervals();
  const std::size_t normals[3] = {0, 1, 3};
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      double dev = 0.0;
      for (std::size_t k = 0; k < 3000; ++k)
        dev = std::max(dev, std::abs(g.value(0, iv[normals[a]].begin + k) - g.value(0, iv[normals[b]].begin + k)));
      CHECK(dev > 1.0);
    }
}

TEST_CASE("lorentz config validation") {
  LorentzConfig c;
  c.dt = 0.0;
  CHECK_THROWS_AS(generate_lorentz(c), Error);
  c = {};
  c.steps_per_interval = 0;
  CHECK_THROWS_AS(generate_lorentz(c), Error);
  c = {};
  c.schedule.clear();
  CHECK_THROWS_AS(generate_lorentz(c), Error);
}

TEST_CASE("etc: sizes, schedule and labels") {
  EtcConfig d;
  CHECK(d.samples_per_run() == 180000);
  CHECK(d.samples_per_run() * d.schedule.size() == 1080000);

  EtcConfig c;
  c.run_seconds = 60;
  c.seed = 4;
  const auto s = generate_etc(c);
  const auto& f = s.frame;
  CHECK(f.sensor_names() == std::vector<std::string>{"theta", "u"});
  CHECK(f.length() == 6 * 3000);
  REQUIRE(f.intervals().size() == 6);
  const char* tags[] = {"normal", "fault:K_b", "fault:K_t", "normal", "fault:L_a", "normal"};
  for (std::size_t r = 0; r < 6; ++r) {
    CHECK(f.intervals()[r].tag == tags[r]);
    for (std::size_t t = f.intervals()[r].begin; t < f.intervals()[r].end; ++t)
      CHECK(f.labels()[t] == (r == 0 || r == 3 || r == 5 ? 0 : 1));
  }
  REQUIRE(s.trace_names == std::vector<std::string>{"K_b_ratio", "K_t_ratio", "L_a_ratio", "theta_ref"});
  CHECK(s.trace[0][3100] == doctest::Approx(1.3));
  CHECK(s.trace[1][6100] == doctest::Approx(0.7));
  CHECK(s.trace[2][12100] == doctest::Approx(1.3));
  CHECK(generate_etc(c).frame == f);
}

TEST_CASE("etc: nominal run tracks each step") {
  EtcConfig c;
  c.run_seconds = 300;
  c.schedule = {{"normal", 1.0, 1.0, 1.0}};
  const auto s = generate_etc(c);
  const auto& theta = s.frame.column(0);
  const auto& ref = s.trace[3];
  std::size_t checked = 0;
  for (std::size_t t = 1; t < ref.size(); ++t) {
    if (ref[t] == ref[t - 1] && t + 1 != ref.size()) continue;
    // t - 1 is the last sample of a dwell (or of the run)
    const std::size_t end = t + 1 == ref.size() ? t : t - 1;
    std::size_t start = end;
    while (start > 0 && ref[start - 1] == ref[end]) --start;
    const double prev = start > 0 ? ref[start - 1] : c.nominal.theta_0;
    const double step = std::abs(ref[end] - prev);
    CHECK(std::abs(theta[end] - ref[end]) <= 0.02 * step + 1e-9);
    ++checked;
  }
  CHECK(checked > 10);
  for (double v : theta) CHECK(std::isfinite(v));
}

TEST_CASE("etc: divergence and bad config are reported") {
  EtcConfig c;
  c.run_seconds = 5;
  c.controller.kp = 5000.0;  // far too stiff for the sampled loop
  c.substeps = 1;
  try {
    generate_etc(c);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::runtime);
  }
  EtcConfig bad;
  bad.tau = -1;
  CHECK_THROWS_AS(generate_etc(bad), Error);
  bad = {};
  bad.ref_min = 2.0;
  CHECK_THROWS_AS(generate_etc(bad), Error);
}

TEST_CASE("save_simulation writes data, metadata and trace") {
  LorentzConfig c;
  c.steps_per_interval = 500;
  const auto s = generate_lorentz(c);
  qwtest::TempDir dir("sim");
  save_simulation(s, dir.file("l.csv"), true);
  CHECK(load_csv(dir.file("l.csv")).length() == 3000);
  CHECK(std::filesystem::exists(dir.file("l.csv.meta.json")));
  CHECK(load_csv(dir.file("l.csv.trace.csv")).sensor_names() == s.trace_names);
}
