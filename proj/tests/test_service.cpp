#include <doctest.h>

#include <fstream>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "qw/incremental.hpp"
#include "qw/model_io.hpp"
#include "qw/service.hpp"
#include "support.hpp"

using namespace qw;
using nlohmann::json;

namespace {

struct Fixture {
  SensorFrame frame;
  NormalityModel model;
  ScoreOptions score;
};

Fixture make_fixture() {
  std::mt19937_64 rng(31);
  auto cols = qwtest::random_columns(rng, 2, 1000, 0);
  std::vector<int> labels(1000, 0);
  for (std::size_t t = 600; t < 800; ++t) {
    cols[1][t] = -cols[1][t] + 0.7;
    labels[t] = 1;
  }
  Fixture f{qwtest::make_frame(cols, labels), {}, {}};
  HyperParams h;
  h.n_levels = 5;
  h.delta = 4;
  h.eta = 0.9;
  f.score.window.length = 40;
  f.model = with_normalizers(fit(f.frame, {0, 400}, h), f.frame, f.score);
  return f;
}

json get_json(httplib::Client& c, const std::string& path, int expect = 200) {
  auto r = c.Get(path);
  REQUIRE(r);
  CHECK(r->status == expect);
  return json::parse(r->body);
}

json post_json(httplib::Client& c, const std::string& path, const std::string& body, int expect) {
  auto r = c.Post(path, body, "application/json");
  REQUIRE(r);
  CHECK(r->status == expect);
  return json::parse(r->body);
}

}  // namespace

TEST_CASE("service end to end") {
  const Fixture fx = make_fixture();
  qwtest::TempDir dir("svc");
  ServiceOptions o;
  o.port = 0;
  o.score = fx.score;
  o.history = {dir.file("journal.jsonl"), dir.file("snaps")};
  o.static_dir = dir.path.string();
  std::ofstream(dir.file("index.html")) << "<html>qwatch</html>";
  FeedbackService svc(fx.model, fx.frame, o);
  const int port = svc.start();
  httplib::Client c("127.0.0.1", port);

  // scores equal the library's scoring
  const auto expect = score_frame(fx.model, fx.frame, fx.score, *fx.model.normalizers);
  auto s = get_json(c, "/api/scores?from=100&to=300");
  CHECK(s["version"] == 1);
  REQUIRE(s["window_start"].size() == 200);
  for (std::size_t k = 0; k < 200; ++k) {
    CHECK(s["window_start"][k].get<std::size_t>() == 100 + k);
    CHECK(s["aggregated"][k].get<double>() == expect.aggregated(100 + k));
    CHECK(s["sensors"]["s1"]["r_conf"][k].get<double>() == expect.residuals(100 + k, 1).r_conf);
  }
  // smoothing uses the windows before `from`
  auto sm = get_json(c, "/api/scores?from=650&to=700&smoothing=30");
  const auto full = smooth_max(expect.aggregated(), 30);
  for (std::size_t k = 0; k < 50; ++k) CHECK(sm["smoothed"][k].get<double>() == full[650 + k]);
  get_json(c, "/api/scores?from=x", 400);
  get_json(c, "/api/scores?from=10&to=5", 400);

  auto w = get_json(c, "/api/window/620");
  CHECK(w["aggregated"].get<double>() == expect.aggregated(620));
  CHECK(w["sensors"][1]["values"].size() == 40);
  CHECK(w["labels"][0] == 1);
  get_json(c, "/api/window/999999", 404);

  auto m = get_json(c, "/api/model");
  CHECK(m["active_version"] == 1);
  CHECK(m["hyper"]["n_q"] == 5);
  CHECK(m["sensors"].size() == 2);

  auto page = c.Get("/index.html");
  REQUIRE(page);
  CHECK(page->body == "<html>qwatch</html>");

  // feedback errors
  post_json(c, "/api/feedback", "{not json", 400);
  post_json(c, "/api/feedback", R"({"window":[10,12],"verdict":"normal"})", 422);
  post_json(c, "/api/feedback", R"({"window":[900,2000],"verdict":"normal"})", 422);
  post_json(c, "/api/feedback", R"({"window":[100,200],"verdict":"anomalous","zeta":1.5})", 400);
  post_json(c, "/api/feedback", R"({"window":[100,200],"verdict":"normal","base_version":7})", 409);
  CHECK(get_json(c, "/api/model")["active_version"] == 1);

  // normal verdict on a training window: scores there stay at zero residuals
  auto r = post_json(c, "/api/feedback", R"({"window":[100,200],"verdict":"normal","base_version":1})", 200);
  CHECK(r["new_version"] == 2);
  auto s2 = get_json(c, "/api/scores?from=100&to=161");
  CHECK(s2["version"] == 2);
  for (std::size_t k = 0; k < 61; ++k) CHECK(s2["aggregated"][k].get<double>() == s["aggregated"][k].get<double>());

  // anomalous verdict on a low-scored window raises its score
  const double before = get_json(c, "/api/window/300")["aggregated"].get<double>();
  post_json(c, "/api/feedback", R"({"window":[300,340],"verdict":"anomalous","zeta":0.99,"base_version":2})", 200);
  const double after = get_json(c, "/api/window/300")["aggregated"].get<double>();
  CHECK(after > before);
  // stale submission
  post_json(c, "/api/feedback", R"({"window":[600,700],"verdict":"normal","base_version":2})", 409);

  // rollback restores the original scores exactly
  const auto original = c.Get("/api/scores?from=0&to=900");
  post_json(c, "/api/rollback", R"({"version":1})", 200);
  post_json(c, "/api/rollback", R"({"version":99})", 404);
  post_json(c, "/api/rollback", R"({})", 400);
  auto m2 = get_json(c, "/api/model");
  CHECK(m2["active_version"] == 1);
  CHECK(m2["versions"].size() == 3);
  auto again = get_json(c, "/api/scores?from=0&to=900");
  CHECK(again["version"] == 1);
  CHECK(again["aggregated"] == get_json(c, "/api/scores?from=0&to=900")["aggregated"]);
  CHECK(again["aggregated"][300].get<double>() == before);

  svc.stop();

  // the journal reproduces the active model
  const auto records = read_journal(o.history.journal_path);
  CHECK(records.size() == 3);
  CHECK(replay_journal(fx.model, fx.frame, records) == *svc.history().active());
  CHECK(load_model(dir.file("snaps/model-v3.json")).version == 3);
}

TEST_CASE("concurrent readers always see one version per response") {
  const Fixture fx = make_fixture();
  ServiceOptions o;
  o.port = 0;
  o.score = fx.score;
  FeedbackService svc(fx.model, fx.frame, o);
  const int port = svc.start();
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::thread reader([&] {
    httplib::Client c("127.0.0.1", port);
    while (!done) {
      auto r = c.Get("/api/scores?from=600&to=640");
      if (!r || r->status != 200) {
        ++bad;
        continue;
      }
      const auto j = json::parse(r->body);
      const auto v = j["version"].get<std::uint64_t>();
      // version 1 scores the fault high; every later version has learned it
      const double a = j["aggregated"][0].get<double>();
      if ((v == 1) != (a == score_frame(fx.model, fx.frame, fx.score, *fx.model.normalizers).aggregated(600))) ++bad;
    }
  });
  httplib::Client c("127.0.0.1", port);
  for (int k = 0; k < 3; ++k) {
    auto r = c.Post("/api/feedback", R"({"window":[560,800],"verdict":"normal"})", "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    c.Post("/api/rollback", R"({"version":1})", "application/json");
  }
  done = true;
  reader.join();
  svc.stop();
  CHECK(bad == 0);
}
