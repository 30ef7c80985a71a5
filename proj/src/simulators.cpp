#include "qw/simulators.hpp"

#include <fstream>
#include <random>

#include <json.hpp>

namespace qw {

using nlohmann::json;

std::vector<double> rk4_step(const DerivativeFn& f, std::span<const double> x, double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::invalid_argument, "rk4 step needs dt > 0");
  const std::size_t n = x.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), out(n);
  auto eval = [&](std::span<const double> at, std::vector<double>& k) {
    f(at, k);
    for (double v : k)
      if (!std::isfinite(v)) fail(ErrorCode::runtime, "non-finite state derivative in RK4 step");
  };
  eval(x, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  eval(tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  eval(tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
  eval(tmp, k4);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

namespace {

bool is_fault(const std::string& tag) { return tag.rfind("fault", 0) == 0; }

// independent stream per (seed, purpose, index)
std::mt19937_64 stream(std::uint64_t seed, std::uint32_t purpose, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), purpose,
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

json intervals_json(const std::vector<Interval>& intervals) {
  json out = json::array();
  for (const auto& iv : intervals) out.push_back({{"begin", iv.begin}, {"end", iv.end}, {"tag", iv.tag}});
  return out;
}

}  // namespace

std::vector<LorentzInterval> default_lorentz_schedule() {
  const LorentzParams nominal;
  LorentzParams sigma = nominal, rho = nominal, beta = nominal;
  sigma.sigma = 8.0;
  rho.rho = 26.0;
  beta.beta = 10.0 / 3.0;
  return {{"normal", nominal}, {"normal", nominal}, {"fault:sigma", sigma},
          {"normal", nominal}, {"fault:rho", rho},  {"fault:beta", beta}};
}

void LorentzConfig::validate() const {
  require(dt > 0.0, "lorentz dt must be positive");
  require(steps_per_interval > 0, "lorentz intervals need at least one step");
  require(!schedule.empty(), "lorentz schedule is empty");
}

Simulation generate_lorentz(const LorentzConfig& config) {
  config.validate();
  const std::size_t n = config.steps_per_interval;
  const std::size_t total = n * config.schedule.size();
  std::vector<double> stamps(total), x1(total), x3(total);
  std::vector<int> labels(total);
  std::vector<std::vector<double>> trace(3, std::vector<double>(total));
  std::vector<Interval> intervals;

  for (std::size_t k = 0; k < config.schedule.size(); ++k) {
    const auto& iv = config.schedule[k];
    const LorentzParams p = iv.params;
    auto f = [&p](const std::array<double, 3>& s) {
      return std::array<double, 3>{p.sigma * (s[1] - s[0]), s[0] * (p.rho - s[2]) - s[1],
                                   s[0] * s[1] - p.beta * s[2]};
    };
    std::array<double, 3> state;
    if (config.initial_state) {
      state = *config.initial_state;
    } else {
      auto rng = stream(config.seed, 1, k);
      std::uniform_real_distribution<double> xy(-20.0, 20.0), z(0.0, 50.0);
      state = {xy(rng), xy(rng), z(rng)};
    }
    for (std::size_t i = 0; i < config.burn_in; ++i) state = rk4_step(f, state, config.dt);

    const std::size_t begin = k * n;
    const int label = is_fault(iv.tag) ? 1 : 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t g = begin + i;
      stamps[g] = static_cast<double>(g) * config.dt;
      x1[g] = state[0];
      x3[g] = state[2];
      labels[g] = label;
      trace[0][g] = p.sigma / config.nominal.sigma;
      trace[1][g] = p.rho / config.nominal.rho;
      trace[2][g] = p.beta / config.nominal.beta;
      state = rk4_step(f, state, config.dt);
    }
    intervals.push_back({begin, begin + n, iv.tag});
  }

  json meta;
  meta["generator"] = "lorentz";
  meta["seed"] = config.seed;
  json sched = json::array();
  for (const auto& iv : config.schedule)
    sched.push_back({{"tag", iv.tag}, {"sigma", iv.params.sigma}, {"rho", iv.params.rho}, {"beta", iv.params.beta}});
  meta["config"] = {{"sigma", config.nominal.sigma},
                    {"rho", config.nominal.rho},
                    {"beta", config.nominal.beta},
                    {"dt", config.dt},
                    {"steps_per_interval", config.steps_per_interval},
                    {"burn_in", config.burn_in},
                    {"schedule", sched}};
  meta["config"]["initial_state"] = config.initial_state ? json(*config.initial_state) : json(nullptr);
  meta["sensors"] = {"x1", "x3"};
  meta["intervals"] = intervals_json(intervals);

  Simulation sim{SensorFrame({"x1", "x3"}, std::move(stamps), {std::move(x1), std::move(x3)}, std::move(labels),
                             std::move(intervals)),
                 {"sigma_ratio", "rho_ratio", "beta_ratio"},
                 std::move(trace),
                 meta.dump(1)};
  return sim;
}

std::vector<EtcRun> default_etc_schedule() {
  return {{"normal"}, {"fault:K_b", 1.3, 1.0, 1.0}, {"fault:K_t", 1.0, 0.7, 1.0},
          {"normal"}, {"fault:L_a", 1.0, 1.0, 1.3}, {"normal"}};
}

double EtcController::resolved_kp(const EtcParams& p) const {
  if (kp) return *kp;
  const double damping = p.K_f + resolved_kd();
  return damping * damping / (4.0 * p.J) - p.K_sp;
}

void EtcConfig::validate() const {
  const auto& p = nominal;
  for (double v : {p.K_sp, p.K_f, p.N, p.K_t, p.R_p, p.R_af, p.K_b, p.L_a, p.J, p.R_a, p.P_atm, p.theta_max})
    require(v > 0.0, "ETC physical parameters must be positive");
  require(controller.resolved_kp(nominal) > -nominal.K_sp && controller.resolved_kd() > -nominal.K_f, "ETC controller gains would destabilize the nominal loop");
  require(tau > 0.0 && substeps >= 1, "ETC needs tau > 0 and at least one substep");
  require(run_seconds >= tau, "ETC run shorter than one sample");
  require(ref_min <= ref_max && dwell_min > 0.0 && dwell_min <= dwell_max, "invalid ETC reference schedule");
  require(!schedule.empty(), "ETC schedule is empty");
  for (const auto& r : schedule)
    require(r.K_b_scale > 0.0 && r.K_t_scale > 0.0 && r.L_a_scale > 0.0, "ETC fault scales must be positive");
}

std::size_t EtcConfig::samples_per_run() const {
  return static_cast<std::size_t>(std::llround(run_seconds / tau));
}

Simulation generate_etc(const EtcConfig& config) {
  config.validate();
  const EtcParams& nom = config.nominal;
  const EtcController& ctl = config.controller;
  const std::size_t n = config.samples_per_run();
  const std::size_t total = n * config.schedule.size();
  const double h = config.tau / static_cast<double>(config.substeps);
  const double pi = 3.141592653589793;

  std::vector<double> stamps(total), theta(total), volts(total);
  std::vector<int> labels(total);
  std::vector<std::vector<double>> trace(4, std::vector<double>(total));
  std::vector<Interval> intervals;

  for (std::size_t k = 0; k < config.schedule.size(); ++k) {
    const EtcRun& run = config.schedule[k];
    EtcParams p = nom;
    p.K_b *= run.K_b_scale;
    p.K_t *= run.K_t_scale;
    p.L_a *= run.L_a_scale;
    auto load = [pi](const EtcParams& q, double th) {
      const double dp = q.P_atm * (1.0 - th / q.theta_max);
      const double c = std::cos(th);
      return pi * q.R_p * q.R_p * q.R_af * dp * c * c;
    };

    auto rng = stream(config.seed, 2, k);
    std::uniform_real_distribution<double> amp(config.ref_min, config.ref_max);
    std::uniform_real_distribution<double> dwell(config.dwell_min, config.dwell_max);
    double ref = amp(rng);
    double next_switch = dwell(rng);

    std::array<double, 3> x{nom.theta_0, 0.0, 0.0};
    const double kp = ctl.resolved_kp(nom), kd = ctl.resolved_kd();
    // uses nominal parameters only
    auto control = [&](const std::array<double, 3>& s) {
      const double torque =
          nom.K_sp * (ref - nom.theta_0) + load(nom, ref) + kp * (ref - s[0]) - kd * s[1];
      const double i_ref = torque / (nom.N * nom.K_t);
      return nom.R_a * i_ref + nom.N * nom.K_b * s[1] + ctl.kc * (i_ref - s[2]);
    };

    const std::size_t begin = k * n;
    const int label = is_fault(run.tag) ? 1 : 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * config.tau;
      while (t >= next_switch) {
        ref = amp(rng);
        next_switch += dwell(rng);
      }
      const std::size_t g = begin + i;
      stamps[g] = static_cast<double>(g) * config.tau;
      theta[g] = x[0];
      volts[g] = control(x);
      labels[g] = label;
      trace[0][g] = run.K_b_scale;
      trace[1][g] = run.K_t_scale;
      trace[2][g] = run.L_a_scale;
      trace[3][g] = ref;
      for (std::size_t j = 0; j < config.substeps; ++j) {
        const double u = control(x);
        auto f = [&](const std::array<double, 3>& s) {
          return std::array<double, 3>{
              s[1], (-p.K_sp * (s[0] - p.theta_0) - p.K_f * s[1] + p.N * p.K_t * s[2] - load(p, s[0])) / p.J,
              (-p.N * p.K_b * s[1] - p.R_a * s[2] + u) / p.L_a};
        };
        try {
          x = rk4_step(f, x, h);
        } catch (const Error&) {
          fail(ErrorCode::runtime, "ETC closed loop diverged in run " + std::to_string(k) + " (" + run.tag +
                                       ") at t = " + format_double(t) + " s");
        }
      }
      for (double v : x)
        if (!std::isfinite(v))
          fail(ErrorCode::runtime, "ETC closed loop diverged in run " + std::to_string(k) + " (" + run.tag +
                                       ") at t = " + format_double(t) + " s");
    }
    intervals.push_back({begin, begin + n, run.tag});
  }

  json meta;
  meta["generator"] = "etc";
  meta["seed"] = config.seed;
  json sched = json::array();
  for (const auto& r : config.schedule)
    sched.push_back({{"tag", r.tag}, {"K_b_scale", r.K_b_scale}, {"K_t_scale", r.K_t_scale}, {"L_a_scale", r.L_a_scale}});
  meta["config"] = {{"params",
                     {{"K_sp", nom.K_sp}, {"K_f", nom.K_f}, {"N", nom.N}, {"K_t", nom.K_t}, {"R_p", nom.R_p},
                      {"R_af", nom.R_af}, {"K_b", nom.K_b}, {"L_a", nom.L_a}, {"J", nom.J}, {"R_a", nom.R_a},
                      {"theta_0", nom.theta_0}, {"P_atm", nom.P_atm}, {"theta_max", nom.theta_max}}},
                    {"controller", {{"kp", ctl.resolved_kp(nom)}, {"kd", ctl.resolved_kd()}, {"kc", ctl.kc}}},
                    {"tau", config.tau},
                    {"substeps", config.substeps},
                    {"run_seconds", config.run_seconds},
                    {"reference", {{"min", config.ref_min}, {"max", config.ref_max},
                                   {"dwell_min", config.dwell_min}, {"dwell_max", config.dwell_max}}},
                    {"schedule", sched}};
  meta["sensors"] = {"theta", "u"};
  meta["intervals"] = intervals_json(intervals);

  return Simulation{SensorFrame({"theta", "u"}, std::move(stamps), {std::move(theta), std::move(volts)},
                                std::move(labels), std::move(intervals)),
                    {"K_b_ratio", "K_t_ratio", "L_a_ratio", "theta_ref"},
                    std::move(trace),
                    meta.dump(1)};
}

void save_simulation(const Simulation& sim, const std::string& path, bool with_trace) {
  save_csv(sim.frame, path);
  {
    std::ofstream out(path + ".meta.json", std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write '" + path + ".meta.json'");
    out << sim.metadata_json << '\n';
  }
  if (with_trace) {
    SensorFrame t(sim.trace_names, sim.frame.timestamps(), sim.trace);
    save_csv(t, path + ".trace.csv");
  }
}

}  // namespace qw
