// Exercises the shared library through its C header only.
#include <doctest.h>

#include <qwatch/qwatch.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "support.hpp"

namespace {

struct Str {
  char* p = nullptr;
  ~Str() { qw_string_free(p); }
  std::string s() const { return p ? p : ""; }
};

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

qw_frame* toy_frame() {
  const size_t n = 800;
  std::vector<double> ts(n), values(2 * n);
  std::vector<int> labels(n, 0);
  for (size_t t = 0; t < n; ++t) {
    ts[t] = static_cast<double>(t);
    values[t] = std::sin(0.11 * static_cast<double>(t));
    values[n + t] = std::cos(0.07 * static_cast<double>(t)) + 0.1 * std::sin(1.3 * static_cast<double>(t));
    if (t >= 600 && t < 700) {
      values[t] = 2.5 * values[t] + 0.4;
      labels[t] = 1;
    }
  }
  const char* names[] = {"a", "b"};
  qw_frame* f = nullptr;
  REQUIRE(qw_frame_create(2, names, n, ts.data(), values.data(), labels.data(), &f) == QW_OK);
  return f;
}

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::string(qw_status_name(QW_ERR_CONFLICT)) == "conflict");
  CHECK(std::string(qw_version_string()).size() > 0);
  qw_frame* f = nullptr;
  CHECK(qw_frame_load_csv("/nonexistent/file.csv", nullptr, 0, &f) == QW_ERR_IO);
  CHECK(std::string(qw_last_error()).find("nonexistent") != std::string::npos);
  CHECK(f == nullptr);
  CHECK(qw_frame_load_csv(nullptr, nullptr, 0, &f) == QW_ERR_INVALID_ARGUMENT);
  CHECK(qw_frame_length(nullptr) == 0);
  qw_frame_free(nullptr);
  qw_model_free(nullptr);
}

TEST_CASE("fit, score, evaluate through the C API") {
  qw_frame* f = toy_frame();
  CHECK(qw_frame_length(f) == 800);
  const double* col = nullptr;
  REQUIRE(qw_frame_column(f, 1, &col) == QW_OK);
  CHECK(col[0] == doctest::Approx(1.0));
  CHECK(qw_frame_column(f, 2, &col) == QW_ERR_INVALID_ARGUMENT);

  qw_fit_options fo;
  qw_fit_options_init(&fo);
  CHECK(fo.n_q == 8);
  CHECK(fo.delta == 20);
  CHECK(fo.eta == 0.95);
  fo.eta = 1.2;
  qw_model* m = nullptr;
  CHECK(qw_model_fit(f, &fo, &m) == QW_ERR_INVALID_ARGUMENT);
  CHECK(std::string(qw_last_error()).find("η ∈ ]0,1[") != std::string::npos);
  fo.eta = 0.95;
  fo.n_q = 6;
  fo.delta = 5;
  fo.n_pred = 40;
  REQUIRE(qw_model_fit(f, &fo, &m) == QW_OK);
  uint64_t version = 0;
  CHECK(qw_model_version(m, &version) == QW_OK);
  CHECK(version == 1);
  Str desc;
  REQUIRE(qw_model_describe(m, &desc.p) == QW_OK);
  CHECK(desc.s().find("\"train_range\"") != std::string::npos);
  CHECK(desc.s().find("600") != std::string::npos);  // leading label-0 run

  qw_score_options so;
  qw_score_options_init(&so);
  so.n_pred = 40;
  qw_scores* s = nullptr;
  REQUIRE(qw_score(m, f, &so, &s) == QW_OK);
  CHECK(qw_scores_window_count(s) == 761);
  size_t start = 0;
  double agg = 0.0, rt = -1, rb = -1, rc = -1;
  REQUIRE(qw_scores_window(s, 10, &start, &agg) == QW_OK);
  CHECK(start == 10);
  REQUIRE(qw_scores_residuals(s, 10, 0, &rt, &rb, &rc) == QW_OK);
  CHECK(rt == 0.0);
  CHECK(rb == 0.0);
  CHECK(qw_scores_window(s, 761, &start, &agg) == QW_ERR_INVALID_ARGUMENT);
  std::vector<double> per(800);
  REQUIRE(qw_scores_per_timestamp(s, 800, per.data()) == QW_OK);

  qw_eval_options eo;
  qw_eval_options_init(&eo);
  const size_t sm[] = {1, 50};
  eo.smoothing = sm;
  eo.smoothing_count = 2;
  Str csv;
  REQUIRE(qw_evaluate(s, f, &eo, &csv.p) == QW_OK);
  CHECK(lines(csv.s()) == 3);

  qwtest::TempDir dir("capi");
  REQUIRE(qw_scores_save_csv(s, dir.file("s.csv").c_str()) == QW_OK);
  Str csv2;
  REQUIRE(qw_evaluate_file(dir.file("s.csv").c_str(), "model", 40, f, &eo, &csv2.p) == QW_OK);
  CHECK(csv2.s() == csv.s());

  const int* labels = nullptr;
  REQUIRE(qw_frame_labels(f, &labels) == QW_OK);
  double auc = 0, pauc = 0, f1 = 0, thr = 0;
  REQUIRE(qw_metrics(per.data(), labels, 800, 0.1, &auc, &pauc, &f1, &thr) == QW_OK);
  CHECK(auc > 0.9);
  CHECK(csv.s().find("model,1,") != std::string::npos);

  REQUIRE(qw_model_save(m, dir.file("m.json").c_str()) == QW_OK);
  qw_model* m2 = nullptr;
  REQUIRE(qw_model_load(dir.file("m.json").c_str(), &m2) == QW_OK);
  Str d2;
  REQUIRE(qw_model_describe(m2, &d2.p) == QW_OK);
  CHECK(d2.s() == desc.s());

  // feedback, then replay of the journal it wrote
  qw_model* m3 = nullptr;
  CHECK(qw_feedback_apply(m, f, R"({"window":[600,700],"verdict":"normal"})", &m3) == QW_OK);
  CHECK(qw_model_version(m3, &version) == QW_OK);
  CHECK(version == 2);
  qw_model* bad = nullptr;
  CHECK(qw_feedback_apply(m, f, R"({"window":[600,700],"verdict":"anomalous","zeta":2})", &bad) ==
        QW_ERR_INVALID_ARGUMENT);
  CHECK(qw_feedback_apply(m, f, "{", &bad) == QW_ERR_FORMAT);
  std::ofstream(dir.file("events.json"))
      << R"([{"window":[600,700],"verdict":"normal"},{"window":[200,260],"verdict":"anomalous","zeta":0.99}])";
  qw_model* m4 = nullptr;
  REQUIRE(qw_feedback_apply_file(m, f, dir.file("events.json").c_str(), dir.file("j.jsonl").c_str(),
                                 dir.file("snaps").c_str(), &m4) == QW_OK);
  qw_model* m5 = nullptr;
  REQUIRE(qw_feedback_apply_file(m, f, dir.file("j.jsonl").c_str(), nullptr, nullptr, &m5) == QW_OK);
  Str d4, d5;
  qw_model_describe(m4, &d4.p);
  qw_model_describe(m5, &d5.p);
  CHECK(d4.s() == d5.s());
  REQUIRE(qw_model_save(m4, dir.file("m4.json").c_str()) == QW_OK);
  REQUIRE(qw_model_save(m5, dir.file("m5.json").c_str()) == QW_OK);
  std::ifstream a(dir.file("m4.json")), b(dir.file("m5.json"));
  CHECK(std::string(std::istreambuf_iterator<char>(a), {}) == std::string(std::istreambuf_iterator<char>(b), {}));

  qw_model_free(m5);
  qw_model_free(m4);
  qw_model_free(m3);
  qw_model_free(m2);
  qw_scores_free(s);
  qw_model_free(m);
  qw_frame_free(f);
}

TEST_CASE("generators, sweep and service through the C API") {
  qw_lorentz_options lo;
  qw_lorentz_options_init(&lo);
  lo.steps_per_interval = 1500;
  qw_frame* f = nullptr;
  qw_frame* trace = nullptr;
  Str meta;
  REQUIRE(qw_generate_lorentz(&lo, &f, &meta.p, &trace) == QW_OK);
  CHECK(qw_frame_length(f) == 9000);
  CHECK(qw_frame_sensor_count(trace) == 3);
  CHECK(meta.s().find("\"intervals\"") != std::string::npos);

  qwtest::TempDir dir("capi-gen");
  const std::string path = dir.file("l.csv");
  REQUIRE(qw_frame_save_csv(f, path.c_str()) == QW_OK);
  std::ofstream(path + ".meta.json") << meta.s();
  qw_frame* g = nullptr;
  REQUIRE(qw_frame_load_csv(path.c_str(), nullptr, 0, &g) == QW_OK);
  Str da, db;
  qw_frame_describe(f, &da.p);
  qw_frame_describe(g, &db.p);
  CHECK(da.s() == db.s());  // intervals come back from the sidecar

  qw_etc_options eo;
  qw_etc_options_init(&eo);
  CHECK(eo.tau == 0.02);
  eo.run_seconds = 20;
  qw_frame* e = nullptr;
  REQUIRE(qw_generate_etc(&eo, &e, nullptr, nullptr) == QW_OK);
  CHECK(qw_frame_length(e) == 6000);

  const int nq[] = {5, 10};
  qw_sweep_options so;
  qw_sweep_options_init(&so);
  so.n_q = nq;
  so.n_q_count = 2;
  so.jobs = 1;
  Str rows, summary;
  REQUIRE(qw_sweep(f, &so, &rows.p, &summary.p) == QW_OK);
  CHECK(lines(rows.s()) == 3);
  CHECK(summary.s().find("2 of 2") != std::string::npos);

  qw_fit_options fo;
  qw_fit_options_init(&fo);
  qw_model* m = nullptr;
  REQUIRE(qw_model_fit(f, &fo, &m) == QW_OK);
  qw_serve_options sv;
  qw_serve_options_init(&sv);
  sv.port = 0;
  qw_service* svc = nullptr;
  REQUIRE(qw_service_create(m, f, &sv, &svc) == QW_OK);
  int port = 0;
  REQUIRE(qw_service_start(svc, &port) == QW_OK);
  CHECK(port > 0);
  qw_service_stop(svc);
  qw_service_free(svc);

  qw_model_free(m);
  qw_frame_free(e);
  qw_frame_free(g);
  qw_frame_free(trace);
  qw_frame_free(f);
}
