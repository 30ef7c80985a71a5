// Acceptance run: one PASS/FAIL line per primary criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "qw/evaluation.hpp"
#include "qw/incremental.hpp"
#include "qw/normality_model.hpp"
#include "qw/residuals.hpp"
#include "qw/simulators.hpp"
#include "reference/metric_suite.hpp"
#include "reference/oracle_suite.hpp"

using namespace qw;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const Interval& interval(const SensorFrame& f, const std::string& tag, std::size_t nth = 0) {
  for (const auto& iv : f.intervals())
    if (iv.tag == tag && nth-- == 0) return iv;
  throw std::runtime_error("no interval " + tag);
}

// Mean of value(k) over windows lying entirely inside the intervals picked by `use`.
double window_mean(const SensorFrame& f, const ScoreTable& t, const std::function<bool(const Interval&)>& use,
                   const std::function<double(std::size_t)>& value) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < t.window_count(); ++k) {
    const std::size_t s = t.window_start(k), e = s + t.n_pred();
    for (const auto& iv : f.intervals())
      if (use(iv) && s >= iv.begin && e <= iv.end) {
        sum += value(k);
        ++n;
        break;
      }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double auc_of(const ScoreTable& t, const std::vector<int>& labels) {
  const auto ts = per_timestamp_scores(t, labels.size());
  return roc_auc(ts, labels);
}

bool is_normal(const Interval& iv) { return iv.tag == "normal"; }

double rk4_error(double dt) {
  std::array<double, 1> x{1.0};
  const auto steps = static_cast<int>(std::lround(1.0 / dt));
  for (int k = 0; k < steps; ++k)
    x = rk4_step<1>([](const std::array<double, 1>& y) { return std::array<double, 1>{-y[0]}; }, x, dt);
  return std::abs(x[0] - std::exp(-1.0));
}

}  // namespace

int main() {
  const auto t_all = std::chrono::steady_clock::now();

  // ---- Lorentz ----------------------------------------------------------
  auto t0 = std::chrono::steady_clock::now();
  LorentzConfig lc;
  lc.seed = 0;
  const SensorFrame lor = generate_lorentz(lc).frame;
  const Interval& train_iv = lor.intervals().front();
  HyperParams lh;
  lh.n_levels = 20;
  lh.delta = 20;
  lh.eta = 0.95;
  ScoreOptions lso;
  lso.window.length = 100;
  lso.epsilon = 1.0;
  NormalityModel lm = fit(lor, {train_iv.begin, train_iv.end}, lh);
  lm.normalizers = calibrate(lm, lor, lso);
  const ScoreTable lt = score_frame(lm, lor, lso, *lm.normalizers);
  const std::vector<int> llab(lor.labels().begin(), lor.labels().end());
  const double lauc = auc_of(lt, llab);
  const double lsec = seconds_since(t0);
  report(lauc >= 0.90 && lsec < 300.0, "lorentz_detection",
         fmt("ROC-AUC %.4f (>= 0.90), %zu/%zu transitions x1/x3, %.1f s (< 300 s)", lauc,
             lm.sensors[0].transitions.size(), lm.sensors[1].transitions.size(), lsec));

  {
    const auto fault = [&](const char* tag) { return [tag](const Interval& iv) { return iv.tag == tag; }; };
    const double beta_trans = window_mean(lor, lt, fault("fault:beta"), [&](std::size_t k) { return lt.residuals(k, 1).r_trans; });
    const double normal_trans = window_mean(lor, lt, is_normal, [&](std::size_t k) { return lt.residuals(k, 1).r_trans; });
    const bool trans_ok = beta_trans > 0.0 && beta_trans >= 5.0 * normal_trans;
    bool conf_ok = true;
    std::ostringstream conf;
    for (std::size_t i = 0; i < 2; ++i) {
      const double base = window_mean(lor, lt, is_normal, [&](std::size_t k) { return lt.residuals(k, i).r_conf; });
      conf << lor.sensor_names()[i] << " normal " << fmt("%.4f", base);
      for (const char* tag : {"fault:sigma", "fault:rho", "fault:beta"}) {
        const double m = window_mean(lor, lt, fault(tag), [&](std::size_t k) { return lt.residuals(k, i).r_conf; });
        conf_ok = conf_ok && m > base;
        conf << " " << (tag + 6) << " " << fmt("%.4f", m);
      }
      conf << "; ";
    }
    report(trans_ok && conf_ok, "residual_signatures",
           fmt("x3 r_trans beta %.5f vs normal %.5f (ratio >= 5); r_conf ", beta_trans, normal_trans) + conf.str());
  }

  {
    const ScoreTable tt = score_starts(lm, lor, lso, *lm.normalizers, train_iv.begin, train_iv.end - 100 + 1);
    bool ok = tt.window_count() == train_iv.end - train_iv.begin - 99;
    double max_conf = 0.0;
    std::size_t bad = 0;
    for (std::size_t k = 0; k < tt.window_count(); ++k)
      for (std::size_t i = 0; i < 2; ++i) {
        const auto& r = tt.residuals(k, i);
        if (r.r_trans != 0.0 || r.r_bound != 0.0 || r.r_conf > 1.0 - lh.eta + 1e-9) ++bad;
        max_conf = std::max(max_conf, r.r_conf);
      }
    ok = ok && bad == 0;
    report(ok, "training_self_consistency",
           fmt("%zu training windows, %zu violations, max r_conf %.6f (<= %.6f)", tt.window_count(), bad, max_conf,
               1.0 - lh.eta + 1e-9));
  }

  {
    t0 = std::chrono::steady_clock::now();
    const auto r = ref::run_oracle_suite(2024, 50);
    const double sec = seconds_since(t0);
    report(r.frames == 50 && r.mismatches == 0 && r.max_error <= 1e-12 && sec < 60.0, "brute_force_oracle",
           fmt("%d frames, %zu windows, %d mismatches, max |diff| %.3g (<= 1e-12), %.1f s (< 60 s)", r.frames,
               r.windows, r.mismatches, r.max_error, sec) +
               (r.first_problem.empty() ? "" : "; " + r.first_problem));
  }

  // ---- incremental learning ---------------------------------------------
  const std::filesystem::path tmp =
      std::filesystem::temp_directory_path() / ("qw-acceptance-" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(tmp);
  ModelHistory history(lm, {(tmp / "journal.jsonl").string(), (tmp / "snapshots").string()});
  {
    const Interval& sigma = interval(lor, "fault:sigma");
    const auto in_sigma = [&](const Interval& iv) { return iv.tag == "fault:sigma"; };
    const double before = window_mean(lor, lt, in_sigma, [&](std::size_t k) { return lt.aggregated(k); });
    FeedbackEvent e;
    e.window = {sigma.begin, sigma.end};
    e.note = "sigma interval is normal";
    history.apply(lor, e);
    const auto up = history.active();
    const ScoreTable ut = score_frame(*up, lor, lso, *up->normalizers);
    const double after = window_mean(lor, ut, in_sigma, [&](std::size_t k) { return ut.aggregated(k); });

    // labels after the relabel: sigma counts as normal; each remaining fault judged on its own
    const auto ts = per_timestamp_scores(ut, lor.length());
    std::string detail;
    bool ok = after < 0.5 * before;
    for (const char* tag : {"fault:rho", "fault:beta"}) {
      std::vector<double> s;
      std::vector<int> l;
      for (const auto& iv : lor.intervals()) {
        if (iv.tag != "normal" && iv.tag != "fault:sigma" && iv.tag != tag) continue;
        for (std::size_t t = iv.begin; t < iv.end; ++t) {
          s.push_back(ts[t]);
          l.push_back(iv.tag == tag ? 1 : 0);
        }
      }
      const double a = roc_auc(s, l);
      ok = ok && a >= 0.85;
      detail += fmt(", %s AUC %.4f", tag + 6, a);
    }
    std::vector<int> remaining = llab;
    for (std::size_t t = sigma.begin; t < sigma.end; ++t) remaining[t] = 0;
    detail += fmt(", combined %.4f", roc_auc(ts, remaining));
    report(ok, "il_increase",
           fmt("sigma mean score %.4f -> %.4f (ratio %.3f < 0.5)", before, after, after / before) + detail +
               " (>= 0.85)");
  }

  {
    const auto v2 = history.active();
    const ScoreTable t2 = score_frame(*v2, lor, lso, *v2->normalizers);
    const Interval& second_normal = interval(lor, "normal", 1);
    const ScoreTable train_scores =
        score_starts(*v2, lor, lso, *v2->normalizers, train_iv.begin, train_iv.end - 100 + 1);
    const double train_max = *std::max_element(train_scores.aggregated().begin(), train_scores.aggregated().end());
    // lowest-scoring window of the second normal interval
    std::size_t pick = second_normal.begin;
    for (std::size_t s = second_normal.begin; s + 100 <= second_normal.end; ++s)
      if (t2.aggregated(s) < t2.aggregated(pick)) pick = s;
    const double before = t2.aggregated(pick);

    FeedbackEvent e;
    e.window = {pick, pick + 100};
    e.verdict = Verdict::anomalous;
    e.zeta = 0.99;
    e.base_version = history.active_version();
    history.apply(lor, e);
    const auto v3 = history.active();
    const double after = score_starts(*v3, lor, lso, *v3->normalizers, pick, pick + 1).aggregated(0);

    const auto records = read_journal((tmp / "journal.jsonl").string());
    const NormalityModel replayed = replay_journal(lm, lor, records);
    const bool same = replayed == *v3;
    report(before < train_max && after > before && same && records.size() == 2, "il_reduce",
           fmt("window %zu scored %.4f (training max %.4f) -> %.4f after zeta 0.99; journal of %zu records replays to "
               "version %llu %s",
               pick, before, train_max, after, records.size(), static_cast<unsigned long long>(replayed.version),
               same ? "identical" : "DIFFERENT"));
  }
  std::filesystem::remove_all(tmp);

  // ---- ETC ----------------------------------------------------------------
  t0 = std::chrono::steady_clock::now();
  EtcConfig ec;
  ec.seed = 0;
  const SensorFrame etc = generate_etc(ec).frame;
  const Interval& etc_train = etc.intervals().front();
  HyperParams eh;
  eh.n_levels = 10;
  eh.delta = 20;
  eh.eta = 0.95;
  ScoreOptions eso;
  eso.window.length = 100;
  eso.epsilon = 0.0;
  NormalityModel em = fit(etc, {etc_train.begin, etc_train.end}, eh);
  em.normalizers = calibrate(em, etc, eso);
  const ScoreTable et = score_frame(em, etc, eso, *em.normalizers);

  // ---- bounds with n_w ----------------------------------------------------
  {
    std::size_t models = 0, violations = 0;
    std::string worst;
    const auto check = [&](const NormalityModel& m, const std::string& name) {
      ++models;
      const auto count = np3_scalar_count(m), bound = np3_scalar_bound(m);
      if (count > bound) ++violations;
      worst += fmt(" %s %zu/%zu", name.c_str(), count, bound);
    };
    for (int nw : {1, 5, 20}) {
      HyperParams h = lh;
      h.n_clusters = nw;
      const auto m = fit(lor, {train_iv.begin, train_iv.end}, h);
      check(m, "lorentz(n_w=" + std::to_string(nw) + ")");
      const Interval& sigma = interval(lor, "fault:sigma");
      check(il_increase(m, lor, {sigma.begin, sigma.end}), "lorentz+IL(n_w=" + std::to_string(nw) + ")");
      HyperParams g = eh;
      g.n_clusters = nw;
      check(fit(etc, {etc_train.begin, etc_train.end}, g), "etc(n_w=" + std::to_string(nw) + ")");
    }
    std::mt19937_64 rng(5);
    for (int k = 0; k < 20; ++k) {
      const std::size_t ns = 1 + rng() % 3, len = 200 + rng() % 300;
      std::vector<std::vector<double>> cols(ns, std::vector<double>(len));
      std::normal_distribution<double> n;
      for (auto& c : cols)
        for (std::size_t t = 0; t < len; ++t) c[t] = std::sin(0.1 * static_cast<double>(t) * (1 + k % 3)) + 0.3 * n(rng);
      std::vector<std::string> names;
      for (std::size_t i = 0; i < ns; ++i) names.push_back("s" + std::to_string(i));
      std::vector<double> ts(len);
      for (std::size_t t = 0; t < len; ++t) ts[t] = static_cast<double>(t);
      HyperParams h;
      h.n_levels = 2 + static_cast<int>(rng() % 8);
      h.delta = 2 + static_cast<int>(rng() % 10);
      h.eta = 0.99;
      h.n_clusters = 1 + static_cast<int>(rng() % 4);
      const auto m = fit(SensorFrame(names, ts, cols), {0, len}, h);
      ++models;
      if (np3_scalar_count(m) > np3_scalar_bound(m)) ++violations;
    }
    report(violations == 0, "np3_cardinality_bound",
           fmt("%zu models, %zu violations;", models, violations) + worst);
  }

  {
    const auto r = ref::run_metric_suite(99, 1000);
    report(r.sets == 1000 && r.max_error <= 1e-12 && r.max_full_pauc_gap <= 1e-12 && r.threshold_mismatches == 0,
           "metric_oracles",
           fmt("%d sets, max |diff| %.3g (<= 1e-12), |pAUC(1) - AUC| %.3g, %d threshold mismatches", r.sets,
               r.max_error, r.max_full_pauc_gap, r.threshold_mismatches));
  }

  {
    const double e1 = rk4_error(0.1), e2 = rk4_error(0.05);
    const double ratio = e1 / e2;
    report(ratio >= 8.0 && ratio <= 32.0, "rk4_order",
           fmt("error %.3e at dt=0.1, %.3e at dt=0.05, ratio %.2f (16 within a factor 2)", e1, e2, ratio));
  }

  {
    const std::vector<int> elab(etc.labels().begin(), etc.labels().end());
    const double auc = auc_of(et, elab);
    const auto tagged = [](const char* tag) { return [tag](const Interval& iv) { return iv.tag == tag; }; };
    const auto u_bound = [&](std::size_t k) { return et.residuals(k, 1).r_bound; };
    const double base = window_mean(etc, et, is_normal, u_bound);
    const double kb = window_mean(etc, et, tagged("fault:K_b"), u_bound);
    const double kt = window_mean(etc, et, tagged("fault:K_t"), u_bound);
    report(auc >= 0.65 && kb > base && kt > base, "etc_sanity",
           fmt("ROC-AUC %.4f (>= 0.65); u r_bound normal %.3e, K_b %.3e, K_t %.3e; %.1f s", auc, base, kb, kt,
               seconds_since(t0)));
  }

  std::printf("%d of 10 criteria failed, %.1f s total\n", failures, seconds_since(t_all));
  return failures == 0 ? 0 : 1;
}
