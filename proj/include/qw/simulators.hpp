#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qw/error.hpp"
#include "qw/timeseries.hpp"

namespace qw {

namespace detail {
template <std::size_t N>
void check_finite(const std::array<double, N>& k) {
  for (double v : k)
    if (!std::isfinite(v)) fail(ErrorCode::runtime, "non-finite state derivative in RK4 step");
}
}  // namespace detail

/// Classical fourth-order Runge-Kutta step for a fixed-size state. `f(x)`
/// returns dx/dt; any input is held constant over the step by the caller's
/// closure.
template <std::size_t N, typename F>
std::array<double, N> rk4_step(F&& f, const std::array<double, N>& x, double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::invalid_argument, "rk4 step needs dt > 0");
  std::array<double, N> tmp{};
  const std::array<double, N> k1 = f(x);
  detail::check_finite(k1);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  const std::array<double, N> k2 = f(tmp);
  detail::check_finite(k2);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  const std::array<double, N> k3 = f(tmp);
  detail::check_finite(k3);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + dt * k3[i];
  const std::array<double, N> k4 = f(tmp);
  detail::check_finite(k4);
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

using DerivativeFn = std::function<void(std::span<const double> x, std::span<double> dxdt)>;

/// Dynamic-size variant of the step above.
std::vector<double> rk4_step(const DerivativeFn& f, std::span<const double> x, double dt);

struct LorentzParams {
  double sigma = 12.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};

struct LorentzInterval {
  std::string tag;  // "normal" or "fault:<param>"
  LorentzParams params;
};

/// Six intervals: normal, normal, sigma 8, normal, rho 26, beta 10/3.
std::vector<LorentzInterval> default_lorentz_schedule();

struct LorentzConfig {
  LorentzParams nominal;
  double dt = 0.01;
  std::size_t steps_per_interval = 60000;
  /// Steps integrated and discarded after each random initial state so every
  /// interval starts on the attractor.
  std::size_t burn_in = 1000;
  /// Fixed initial state for every interval; random when absent.
  std::optional<std::array<double, 3>> initial_state;
  std::vector<LorentzInterval> schedule = default_lorentz_schedule();
  std::uint64_t seed = 0;

  void validate() const;
};

struct EtcParams {
  double K_sp = 0.4316;
  double K_f = 0.4834;
  double N = 4.0;
  double K_t = 0.1045;
  double R_p = 0.0015;
  double R_af = 0.002;
  double K_b = 0.1051;
  double L_a = 0.003;
  // not given numerically in the source model; stand-ins
  double J = 1e-3;
  double R_a = 1.15;
  double theta_0 = 0.1;
  double P_atm = 101325.0;
  double theta_max = 1.5707963267948966;
};

/// Multipliers applied to the nominal parameters during one run.
struct EtcRun {
  std::string tag;
  double K_b_scale = 1.0;
  double K_t_scale = 1.0;
  double L_a_scale = 1.0;
};

/// normal, K_b +30%, K_t -30%, normal, L_a +30%, normal.
std::vector<EtcRun> default_etc_schedule();

/// Cascaded controller. The outer loop adds PD on the angle error to the
/// nominal static torque at the set-point and converts it into a current
/// reference; a proportional voltage law with back-EMF compensation tracks
/// that current. Nominal error dynamics are
///   J e'' + (K_f + kd) e' + (K_sp + kp) e = 0
/// and unset gains default to kd = 0 and the kp that makes them critically
/// damped (double pole at -K_f / 2J).
struct EtcController {
  std::optional<double> kp;
  std::optional<double> kd;
  double kc = 1.0;

  double resolved_kp(const EtcParams& nominal) const;
  double resolved_kd() const { return kd.value_or(0.0); }
};

struct EtcConfig {
  EtcParams nominal;
  EtcController controller;
  double tau = 0.02;
  std::size_t substeps = 20;
  double run_seconds = 3600.0;
  double ref_min = 0.2;
  double ref_max = 1.2;
  double dwell_min = 5.0;
  double dwell_max = 20.0;
  std::vector<EtcRun> schedule = default_etc_schedule();
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t samples_per_run() const;
};

/// Generated dataset plus the per-sample parameter trace (fault parameter over
/// its nominal value, and the reference for the throttle) and a JSON
/// description of config, seed and interval schedule.
struct Simulation {
  SensorFrame frame;
  std::vector<std::string> trace_names;
  std::vector<std::vector<double>> trace;
  std::string metadata_json;
};

Simulation generate_lorentz(const LorentzConfig& config);
Simulation generate_etc(const EtcConfig& config);

/// Writes <path> (CSV), <path>.meta.json and, when requested, <path>.trace.csv.
void save_simulation(const Simulation& sim, const std::string& path, bool with_trace);

}  // namespace qw
