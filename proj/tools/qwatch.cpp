// Command-line front end. Talks to the library only through the C API.
#include <qwatch/qwatch.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

enum class Level { error = 0, warn, info, debug };

Level log_level() {
  const char* env = std::getenv("QW_LOG");
  if (!env) return Level::warn;
  const std::string v = env;
  if (v == "error") return Level::error;
  if (v == "info") return Level::info;
  if (v == "debug") return Level::debug;
  return Level::warn;
}

void log(Level lvl, const std::string& msg) {
  static const Level threshold = log_level();
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (lvl <= threshold) std::cerr << "[qwatch " << names[static_cast<int>(lvl)] << "] " << msg << '\n';
}

// thrown out of a command; carries the exit code
struct Failure {
  int exit_code;
  std::string kind;
  std::string message;
};

void check(qw_status st, const std::string& what) {
  if (st == QW_OK) return;
  const int code = st == QW_ERR_INVALID_ARGUMENT ? 1 : 2;
  throw Failure{code, qw_status_name(st), what + ": " + qw_last_error()};
}

[[noreturn]] void invalid(const std::string& msg) { throw Failure{1, "invalid_argument", msg}; }

struct Owned {
  char* p = nullptr;
  ~Owned() { qw_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

using FramePtr = std::unique_ptr<qw_frame, decltype(&qw_frame_free)>;
using ModelPtr = std::unique_ptr<qw_model, decltype(&qw_model_free)>;
using ScoresPtr = std::unique_ptr<qw_scores, decltype(&qw_scores_free)>;

FramePtr load_frame(const std::string& path, const std::vector<std::string>& sensors) {
  std::vector<const char*> names;
  for (const auto& s : sensors) names.push_back(s.c_str());
  qw_frame* f = nullptr;
  check(qw_frame_load_csv(path.c_str(), names.empty() ? nullptr : names.data(), names.size(), &f), "load " + path);
  return FramePtr(f, qw_frame_free);
}

ModelPtr load_model(const std::string& path) {
  qw_model* m = nullptr;
  check(qw_model_load(path.c_str(), &m), "load " + path);
  return ModelPtr(m, qw_model_free);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{2, "io", "cannot write '" + path + "'"};
  out << text;
  if (!out) throw Failure{2, "io", "write failed for '" + path + "'"};
}

template <typename T>
void require_positive(const char* flag, T v) {
  if (v <= 0) invalid(std::string(flag) + " must be positive");
}

// ---- generate ----------------------------------------------------------

struct GenerateArgs {
  std::string system;
  std::uint64_t seed = 0;
  std::string out;
  bool trace = false;
  std::size_t steps = 60000;
  std::size_t burn_in = 1000;
  double dt = 0.01;
  double run_seconds = 3600;
  double tau = 0.02;
  std::size_t substeps = 20;
};

void save_generated(qw_frame* frame, char* meta, qw_frame* trace, const GenerateArgs& a) {
  FramePtr f(frame, qw_frame_free);
  FramePtr t(trace, qw_frame_free);
  Owned m{meta};
  check(qw_frame_save_csv(f.get(), a.out.c_str()), "save " + a.out);
  write_text(a.out + ".meta.json", m.str() + "\n");
  if (t) check(qw_frame_save_csv(t.get(), (a.out + ".trace.csv").c_str()), "save trace");
  log(Level::info, "wrote " + std::to_string(qw_frame_length(f.get())) + " samples to " + a.out);
}

void cmd_generate(const GenerateArgs& a) {
  qw_frame* frame = nullptr;
  qw_frame* trace = nullptr;
  char* meta = nullptr;
  if (a.system == "lorentz") {
    qw_lorentz_options o;
    qw_lorentz_options_init(&o);
    o.seed = a.seed;
    o.steps_per_interval = a.steps;
    o.burn_in = a.burn_in;
    o.dt = a.dt;
    check(qw_generate_lorentz(&o, &frame, &meta, a.trace ? &trace : nullptr), "generate lorentz");
  } else {
    qw_etc_options o;
    qw_etc_options_init(&o);
    o.seed = a.seed;
    o.run_seconds = a.run_seconds;
    o.tau = a.tau;
    o.substeps = a.substeps;
    check(qw_generate_etc(&o, &frame, &meta, a.trace ? &trace : nullptr), "generate etc");
  }
  save_generated(frame, meta, trace, a);
}

// ---- fit ---------------------------------------------------------------

struct FitArgs {
  std::string data, out;
  std::vector<std::string> sensors;
  int n_q = 8, delta = 20, n_w = 0;
  double eta = 0.95;
  std::string bounds = "minmax", scaler = "standard";
  double bounds_percentile = 0.1;
  std::size_t train_begin = 0, train_end = 0;
  std::size_t n_pred = 100;
  double epsilon = 1.0;
  std::size_t jobs = 0;
};

void cmd_fit(const FitArgs& a) {
  auto frame = load_frame(a.data, a.sensors);
  qw_fit_options o;
  qw_fit_options_init(&o);
  o.n_q = a.n_q;
  o.delta = a.delta;
  o.eta = a.eta;
  o.n_w = a.n_w;
  o.bounds = a.bounds.c_str();
  o.bounds_percentile = a.bounds_percentile;
  o.scaler = a.scaler.c_str();
  o.train_begin = a.train_begin;
  o.train_end = a.train_end;
  o.n_pred = a.n_pred;
  o.epsilon = a.epsilon;
  o.jobs = a.jobs;
  qw_model* m = nullptr;
  check(qw_model_fit(frame.get(), &o, &m), "fit");
  ModelPtr model(m, qw_model_free);
  check(qw_model_save(model.get(), a.out.c_str()), "save " + a.out);
  Owned desc;
  check(qw_model_describe(model.get(), &desc.p), "describe");
  log(Level::info, "model: " + desc.str());
}

// ---- score -------------------------------------------------------------

struct ScoreArgs {
  std::string model, data, out;
  std::vector<std::string> sensors;
  std::size_t n_pred = 100, stride = 1, jobs = 0;
  double epsilon = 1.0;
  std::string rtrans_norm = "per_window";
};

ScoresPtr run_score(const qw_model* model, const qw_frame* frame, const ScoreArgs& a) {
  qw_score_options o;
  qw_score_options_init(&o);
  o.n_pred = a.n_pred;
  o.stride = a.stride;
  o.epsilon = a.epsilon;
  o.rtrans_norm = a.rtrans_norm.c_str();
  o.jobs = a.jobs;
  qw_scores* s = nullptr;
  check(qw_score(model, frame, &o, &s), "score");
  return ScoresPtr(s, qw_scores_free);
}

void cmd_score(const ScoreArgs& a) {
  auto model = load_model(a.model);
  auto frame = load_frame(a.data, a.sensors);
  auto scores = run_score(model.get(), frame.get(), a);
  check(qw_scores_save_csv(scores.get(), a.out.c_str()), "save " + a.out);
  log(Level::info, std::to_string(qw_scores_window_count(scores.get())) + " windows scored");
}

// ---- feedback ----------------------------------------------------------

struct FeedbackArgs {
  std::string model, data, events, out, journal, snapshots;
  std::vector<std::string> sensors;
};

void cmd_feedback(const FeedbackArgs& a) {
  auto model = load_model(a.model);
  auto frame = load_frame(a.data, a.sensors);
  qw_model* m = nullptr;
  check(qw_feedback_apply_file(model.get(), frame.get(), a.events.c_str(), a.journal.empty() ? nullptr : a.journal.c_str(),
                               a.snapshots.empty() ? nullptr : a.snapshots.c_str(), &m),
        "feedback");
  ModelPtr updated(m, qw_model_free);
  check(qw_model_save(updated.get(), a.out.c_str()), "save " + a.out);
  std::uint64_t v = 0;
  check(qw_model_version(updated.get(), &v), "version");
  log(Level::info, "model version " + std::to_string(v) + " written to " + a.out);
}

// ---- evaluate ----------------------------------------------------------

struct EvaluateArgs {
  ScoreArgs score;
  std::string scores_file, source = "external";
  std::vector<std::size_t> smoothing{1, 500, 1000, 5000};
  double max_fpr = 0.1;
  bool pauc_raw = false;
};

void cmd_evaluate(const EvaluateArgs& a) {
  if (a.score.model.empty() == a.scores_file.empty()) invalid("evaluate needs exactly one of --model or --scores");
  auto frame = load_frame(a.score.data, a.score.sensors);
  qw_eval_options o;
  qw_eval_options_init(&o);
  o.smoothing = a.smoothing.data();
  o.smoothing_count = a.smoothing.size();
  o.max_fpr = a.max_fpr;
  o.pauc_raw = a.pauc_raw ? 1 : 0;
  Owned csv;
  if (!a.score.model.empty()) {
    auto model = load_model(a.score.model);
    auto scores = run_score(model.get(), frame.get(), a.score);
    check(qw_evaluate(scores.get(), frame.get(), &o, &csv.p), "evaluate");
  } else {
    check(qw_evaluate_file(a.scores_file.c_str(), a.source.c_str(), a.score.n_pred, frame.get(), &o, &csv.p),
          "evaluate");
  }
  write_text(a.score.out, csv.str());
}

// ---- sweep -------------------------------------------------------------

struct SweepArgs {
  std::string data, out, summary;
  std::vector<std::string> sensors;
  std::vector<int> n_q{8}, delta{20}, n_w{0};
  std::vector<double> eta{0.95}, epsilon{1.0};
  std::vector<std::size_t> n_pred{100};
  std::size_t train_begin = 0, train_end = 0, jobs = 0;
  double max_fpr = 0.1;
};

void cmd_sweep(const SweepArgs& a) {
  auto frame = load_frame(a.data, a.sensors);
  qw_sweep_options o;
  qw_sweep_options_init(&o);
  o.n_q = a.n_q.data();
  o.n_q_count = a.n_q.size();
  o.delta = a.delta.data();
  o.delta_count = a.delta.size();
  o.eta = a.eta.data();
  o.eta_count = a.eta.size();
  o.epsilon = a.epsilon.data();
  o.epsilon_count = a.epsilon.size();
  o.n_w = a.n_w.data();
  o.n_w_count = a.n_w.size();
  o.n_pred = a.n_pred.data();
  o.n_pred_count = a.n_pred.size();
  o.train_begin = a.train_begin;
  o.train_end = a.train_end;
  o.max_fpr = a.max_fpr;
  o.jobs = a.jobs;
  Owned csv, summary;
  check(qw_sweep(frame.get(), &o, &csv.p, &summary.p), "sweep");
  write_text(a.out, csv.str());
  if (!a.summary.empty())
    write_text(a.summary, summary.str());
  else
    std::cerr << summary.str();
}

// ---- serve -------------------------------------------------------------

struct ServeArgs {
  std::string model, data, host = "127.0.0.1", static_dir, journal, snapshots;
  std::vector<std::string> sensors;
  int port = 8080;
  std::size_t n_pred = 100, stride = 1, cache = 16;
  double epsilon = 1.0;
};

void cmd_serve(const ServeArgs& a) {
  auto model = load_model(a.model);
  auto frame = load_frame(a.data, a.sensors);
  qw_serve_options o;
  qw_serve_options_init(&o);
  o.host = a.host.c_str();
  o.port = a.port;
  o.static_dir = a.static_dir.empty() ? nullptr : a.static_dir.c_str();
  o.journal_path = a.journal.empty() ? nullptr : a.journal.c_str();
  o.snapshot_dir = a.snapshots.empty() ? nullptr : a.snapshots.c_str();
  o.n_pred = a.n_pred;
  o.stride = a.stride;
  o.epsilon = a.epsilon;
  o.cache_entries = a.cache;
  qw_service* s = nullptr;
  check(qw_service_create(model.get(), frame.get(), &o, &s), "serve");
  std::unique_ptr<qw_service, decltype(&qw_service_free)> service(s, qw_service_free);
  int port = 0;
  check(qw_service_bind(service.get(), &port), "bind");
  std::cerr << "listening on http://" << a.host << ':' << port << '\n';
  check(qw_service_run(service.get()), "serve");
}

void add_sensors(CLI::App* c, std::vector<std::string>& sensors) {
  c->add_option("--sensors", sensors, "(plumbing) sensor columns to read, default all");
}

void add_score_flags(CLI::App* c, ScoreArgs& a) {
  c->add_option("--n-pred", a.n_pred, "n_pred: prediction window length, must exceed delta")->capture_default_str();
  c->add_option("--stride", a.stride, "(plumbing) step between window starts")->capture_default_str();
  c->add_option("--epsilon", a.epsilon, "epsilon: bound-residual tolerance")->capture_default_str();
  c->add_option("--rtrans-norm", a.rtrans_norm, "(plumbing) r_trans normalization: per_window|raw_count")
      ->capture_default_str();
  c->add_option("--jobs", a.jobs, "(plumbing) worker cap, 0 = all cores")->capture_default_str();
}

void print_failure(const Failure& f) {
  nlohmann::json j = {{"error", f.kind}, {"message", f.message}, {"exit_code", f.exit_code}};
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qwatch: transition-based anomaly detection for multivariate sensor data"};
  app.set_version_flag("--version", qw_version_string());
  app.set_config("--config", "", "(plumbing) INI file, one [section] per command; flags override it");
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "simulate a labeled benchmark dataset");
  g->add_option("system", gen.system, "lorentz or etc")->required()->check(CLI::IsMember({"lorentz", "etc"}));
  g->add_option("--seed", gen.seed, "seed for every random draw")->capture_default_str();
  g->add_option("--out", gen.out, "(plumbing) output CSV; metadata goes to <out>.meta.json")->required();
  g->add_flag("--trace", gen.trace, "(plumbing) also write hidden-parameter trace to <out>.trace.csv");
  g->add_option("--steps", gen.steps, "lorentz: samples per interval")->capture_default_str();
  g->add_option("--burn-in", gen.burn_in, "lorentz: discarded steps before each interval")->capture_default_str();
  g->add_option("--dt", gen.dt, "lorentz: integration step")->capture_default_str();
  g->add_option("--run-seconds", gen.run_seconds, "etc: length of each run in seconds")->capture_default_str();
  g->add_option("--tau", gen.tau, "etc: sampling period")->capture_default_str();
  g->add_option("--substeps", gen.substeps, "etc: integration substeps per sample")->capture_default_str();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "fit a normality model on a training range");
  f->add_option("--data", fit.data, "(plumbing) input CSV")->required();
  f->add_option("--out", fit.out, "(plumbing) model JSON to write")->required();
  add_sensors(f, fit.sensors);
  f->add_option("--n-q", fit.n_q, "n_q: quantization levels")->capture_default_str();
  f->add_option("--delta", fit.delta, "delta: transition lag in samples")->capture_default_str();
  f->add_option("--eta", fit.eta, "eta: correlation threshold, in ]0,1[")->capture_default_str();
  f->add_option("--n-w", fit.n_w, "n_w: K-Means representatives per transition, 0 = off")->capture_default_str();
  f->add_option("--bounds", fit.bounds, "(plumbing) minmax|percentile")->capture_default_str();
  f->add_option("--bounds-percentile", fit.bounds_percentile, "(plumbing) tail percent for percentile bounds")
      ->capture_default_str();
  f->add_option("--scaler", fit.scaler, "(plumbing) standard|minmax")->capture_default_str();
  f->add_option("--train-begin", fit.train_begin, "(plumbing) first training sample")->capture_default_str();
  f->add_option("--train-end", fit.train_end,
                "(plumbing) end of training range, 0 = first normal interval or leading label-0 run")
      ->capture_default_str();
  f->add_option("--n-pred", fit.n_pred, "n_pred: window length for normalizer calibration")->capture_default_str();
  f->add_option("--epsilon", fit.epsilon, "epsilon: bound tolerance for normalizer calibration")->capture_default_str();
  f->add_option("--jobs", fit.jobs, "(plumbing) worker cap, 0 = all cores")->capture_default_str();

  ScoreArgs score;
  auto* s = app.add_subcommand("score", "score every window of a dataset");
  s->add_option("--model", score.model, "(plumbing) model JSON")->required();
  s->add_option("--data", score.data, "(plumbing) input CSV")->required();
  s->add_option("--out", score.out, "(plumbing) score CSV to write")->required();
  add_sensors(s, score.sensors);
  add_score_flags(s, score);

  FeedbackArgs fb;
  auto* b = app.add_subcommand("feedback", "apply operator feedback or replay a journal");
  b->add_option("--model", fb.model, "(plumbing) base model JSON")->required();
  b->add_option("--data", fb.data, "(plumbing) the dataset the feedback windows refer to")->required();
  b->add_option("--events", fb.events, "(plumbing) event JSON, JSON array of events, or JSONL journal")->required();
  b->add_option("--out", fb.out, "(plumbing) updated model JSON")->required();
  b->add_option("--journal", fb.journal, "(plumbing) append applied events to this journal");
  b->add_option("--snapshots", fb.snapshots, "(plumbing) directory for per-version snapshots");
  add_sensors(b, fb.sensors);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "ROC-AUC, pAUC and best F1 against labels");
  e->add_option("--data", ev.score.data, "(plumbing) labeled CSV")->required();
  e->add_option("--model", ev.score.model, "(plumbing) model JSON, scored in process");
  e->add_option("--scores", ev.scores_file, "(plumbing) precomputed score CSV instead of --model");
  e->add_option("--source", ev.source, "(plumbing) name for --scores in the report")->capture_default_str();
  e->add_option("--out", ev.score.out, "(plumbing) metrics CSV, default stdout");
  e->add_option("--smoothing", ev.smoothing, "(plumbing) trailing-max smoothing widths")->capture_default_str();
  e->add_option("--max-fpr", ev.max_fpr, "(plumbing) pAUC false-positive cap")->capture_default_str();
  e->add_flag("--pauc-raw", ev.pauc_raw, "(plumbing) report raw partial area instead of standardized");
  add_sensors(e, ev.score.sensors);
  add_score_flags(e, ev.score);

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "hyper-parameter grid with summary statistics");
  w->add_option("--data", sw.data, "(plumbing) labeled CSV")->required();
  w->add_option("--out", sw.out, "(plumbing) results CSV, default stdout");
  w->add_option("--summary", sw.summary, "(plumbing) summary text, default stderr");
  add_sensors(w, sw.sensors);
  w->add_option("--n-q", sw.n_q, "n_q values")->capture_default_str();
  w->add_option("--delta", sw.delta, "delta values")->capture_default_str();
  w->add_option("--eta", sw.eta, "eta values")->capture_default_str();
  w->add_option("--epsilon", sw.epsilon, "epsilon values")->capture_default_str();
  w->add_option("--n-w", sw.n_w, "n_w values, 0 = off")->capture_default_str();
  w->add_option("--n-pred", sw.n_pred, "n_pred values")->capture_default_str();
  w->add_option("--train-begin", sw.train_begin, "(plumbing) first training sample")->capture_default_str();
  w->add_option("--train-end", sw.train_end, "(plumbing) end of training range, 0 = automatic")
      ->capture_default_str();
  w->add_option("--max-fpr", sw.max_fpr, "(plumbing) pAUC false-positive cap")->capture_default_str();
  w->add_option("--jobs", sw.jobs, "(plumbing) worker cap, 0 = all cores")->capture_default_str();

  ServeArgs sv;
  auto* v = app.add_subcommand("serve", "HTTP feedback service");
  v->add_option("--model", sv.model, "(plumbing) model JSON")->required();
  v->add_option("--data", sv.data, "(plumbing) dataset CSV")->required();
  v->add_option("--host", sv.host, "(plumbing) bind address")->capture_default_str();
  v->add_option("--port", sv.port, "(plumbing) TCP port, 0 = any")->capture_default_str();
  v->add_option("--static", sv.static_dir, "(plumbing) directory served at /");
  v->add_option("--journal", sv.journal, "(plumbing) feedback journal (JSONL)");
  v->add_option("--snapshots", sv.snapshots, "(plumbing) per-version model snapshots");
  v->add_option("--n-pred", sv.n_pred, "n_pred: prediction window length")->capture_default_str();
  v->add_option("--stride", sv.stride, "(plumbing) step between window starts")->capture_default_str();
  v->add_option("--epsilon", sv.epsilon, "epsilon: bound-residual tolerance")->capture_default_str();
  v->add_option("--cache", sv.cache, "(plumbing) cached score ranges")->capture_default_str();
  add_sensors(v, sv.sensors);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    print_failure({1, "usage", ex.what()});
    return 1;
  }

  try {
    if (*g) cmd_generate(gen);
    else if (*f) cmd_fit(fit);
    else if (*s) cmd_score(score);
    else if (*b) cmd_feedback(fb);
    else if (*e) cmd_evaluate(ev);
    else if (*w) cmd_sweep(sw);
    else if (*v) cmd_serve(sv);
  } catch (const Failure& fail) {
    print_failure(fail);
    return fail.exit_code;
  } catch (const std::exception& ex) {
    print_failure({2, "internal", ex.what()});
    return 2;
  }
  return 0;
}
