#include <doctest.h>

#include <fstream>
#include <set>
#include <thread>

#include "hydra/error.hpp"
#include "hydra/gatekeeper.hpp"
#include "hydra/png_io.hpp"
#include "hydra/rng.hpp"
#include "test_support.hpp"

using namespace hydra;
using hydra::testing::ManualClock;
using hydra::testing::TempDir;

namespace {

const std::vector<std::string> kClasses{"Good", "Bad", "NoData"};
const std::vector<std::string> kAlarm{"Bad"};

ConfidenceVector vec(double good, double bad, double nodata) {
  return {{"Good", good}, {"Bad", bad}, {"NoData", nodata}};
}

ThresholdTable table(double t_bad) {
  return {1, 0.05, {{"Good", 0.0}, {"Bad", t_bad}, {"NoData", 0.0}}, {}};
}

// Confidences are the first pixel's (r, g, b) shares: Good, Bad, NoData.
class ColorBackend final : public ClassifierBackend {
 public:
  std::string name() const override { return "color"; }
  std::unique_ptr<ModelHandle> load(std::span<const std::uint8_t>) const override {
    return std::make_unique<Handle>();
  }
  static ConfidenceVector of(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const double s = 3.0 + r + g + b;
    return vec((1.0 + r) / s, (1.0 + g) / s, (1.0 + b) / s);
  }

 private:
  struct Handle final : ModelHandle {
    const std::vector<std::string>& class_names() const override { return kClasses; }
    ConfidenceVector infer(std::span<const std::uint8_t> png) const override {
      const auto img = decode_png(png);
      return of(img.pixels[0], img.pixels[1], img.pixels[2]);
    }
  };
};

struct Fixture {
  TempDir dir;
  ManualClock clk;
  Catalog catalog{":memory:", clk.clock()};
  BackendRegistry backends;
  std::filesystem::path base = dir.path() / "plots";
  Timestamp next_t = 1598486400;

  Fixture() {
    std::filesystem::create_directories(base);
    catalog.add_root("plots", base.string());
    backends.add(std::make_shared<ColorBackend>());
  }

  ModelId add_model(const std::string& plot = "occ") {
    ModelRecord m;
    m.plot_type = plot;
    m.backend = "color";
    m.class_names = kClasses;
    m.blob = {0};
    m.created_at = clk.now();
    return catalog.insert_model(m);
  }

  std::filesystem::path drop(std::uint8_t r, std::uint8_t g, std::uint8_t b,
                             const std::string& plot = "occ") {
    return hydra::testing::write_plot(base, "RunPeriod-2020-08", 70000, plot, next_t++,
                                      hydra::testing::solid(6, 4, r, g, b));
  }

  GatekeeperConfig config(double rate = 0.05, std::uint64_t seed = 1) {
    return {{rate, seed}, {}, std::chrono::seconds(60)};
  }
};

}  // namespace

TEST_SUITE("gatekeeper") {

TEST_CASE("decide: rule application") {
  CHECK(decide(vec(0.99, 0.005, 0.005), table(0.9), kAlarm) == GateDecision{Decision::Ok, ""});
  CHECK(decide(vec(0.03, 0.95, 0.02), table(0.9), kAlarm) ==
        GateDecision{Decision::Alarm, "Bad"});
  CHECK(decide(vec(0.35, 0.60, 0.05), table(0.9), kAlarm) ==
        GateDecision{Decision::Flagged, "Bad"});
  // Low-confidence non-alarm argmax is still Ok.
  CHECK(decide(vec(0.34, 0.33, 0.33), table(0.9), kAlarm).kind == Decision::Ok);
  ThresholdTable two{1, 0.05, {{"Good", 0.0}, {"Bad", 0.5}}, {}};
  try {
    decide(vec(0.1, 0.8, 0.1), two, kAlarm);
    FAIL("expected ClassMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ClassMismatch);
  }
}

TEST_CASE("decide never alarms below threshold") {
  Rng rng(1);
  for (int i = 0; i < 5000; ++i) {
    const double a = rng.uniform01(), b = rng.uniform01(), c = rng.uniform01();
    const double s = a + b + c;
    const auto v = vec(a / s, b / s, c / s);
    ThresholdTable t{1, 0.05,
                     {{"Good", rng.uniform01()}, {"Bad", rng.uniform01()}, {"NoData", rng.uniform01()}},
                     {}};
    const std::vector<std::string> alarm =
        rng.below(2) ? kAlarm : std::vector<std::string>{"Bad", "NoData"};
    const auto d = decide(v, t, alarm);
    const auto& top = v[argmax(v)];
    if (d.kind == Decision::Alarm) {
      CHECK(top.probability >= t.threshold(top.class_name));
      CHECK(d.class_name == top.class_name);
    }
    const bool is_alarm_class = std::find(alarm.begin(), alarm.end(), top.class_name) != alarm.end();
    CHECK((d.kind == Decision::Ok) == !is_alarm_class);
  }
}

TEST_CASE("sample_draw is keyed on seed and image id") {
  SampleConfig cfg{0.3, 7};
  std::size_t hits = 0;
  for (ImageId id = 1; id <= 2000; ++id) {
    CHECK(sample_draw(cfg, id) == sample_draw(cfg, id));
    hits += sample_draw(cfg, id);
  }
  CHECK(hits > 500);
  CHECK(hits < 700);
  for (ImageId id = 1; id <= 200; ++id) {
    CHECK(sample_draw({1.0, 3}, id));
    CHECK_FALSE(sample_draw({0.0, 3}, id));
  }
  CHECK_THROWS_AS((SampleConfig{1.5, 0}.validate()), Error);
}

TEST_CASE("default poll interval is one minute") {
  CHECK(GatekeeperConfig{}.poll_interval == std::chrono::seconds(60));
  CHECK(SampleConfig{}.sample_rate == 0.05);
}

TEST_CASE("process_image without a model") {
  Fixture f;
  f.drop(10, 200, 10);
  f.catalog.scan("plots");
  Gatekeeper gk(f.catalog, f.backends, f.config(1.0));
  const auto rec = gk.process_image(f.catalog.query_images({})[0].image.image_id);
  CHECK(rec.decision == Decision::NoModel);
  CHECK_FALSE(rec.model_id);
  CHECK(rec.sampled);
  CHECK(f.catalog.operational_count() == 1);
  CHECK_THROWS_AS(gk.process_image(12345), Error);
}

TEST_CASE("process_image decision equals decide(infer(image))") {
  Fixture f;
  const auto model = f.add_model();
  f.catalog.put_thresholds({model, 0.05, {{"Good", 0.0}, {"Bad", 0.6}, {"NoData", 0.0}}, {}});
  Rng rng(13);
  std::vector<std::array<std::uint8_t, 3>> colors;
  for (int i = 0; i < 60; ++i) {
    std::array<std::uint8_t, 3> c{std::uint8_t(rng.below(256)), std::uint8_t(rng.below(256)),
                                  std::uint8_t(rng.below(256))};
    if (i % 5 == 0) c = {5, 250, 5};
    colors.push_back(c);
    f.drop(c[0], c[1], c[2]);
  }
  Gatekeeper gk(f.catalog, f.backends, f.config());
  const auto recs = gk.poll_once({"plots"});
  REQUIRE(recs.size() == 60);
  std::set<Decision> seen;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& c = colors[i];
    const auto v = ColorBackend::of(c[0], c[1], c[2]);
    const auto expected = decide(v, *f.catalog.thresholds(model), kAlarm);
    CHECK(recs[i].model_id == model);
    CHECK(recs[i].confidence_vector == v);
    CHECK(recs[i].decision == expected.kind);
    CHECK(recs[i].decision_class == expected.class_name);
    CHECK(recs[i].predicted_class == v[argmax(v)].class_name);
    seen.insert(recs[i].decision);
  }
  CHECK(seen.contains(Decision::Alarm));
  CHECK(seen.contains(Decision::Ok));
}

TEST_CASE("uncalibrated models alarm on any alarm-class argmax") {
  Fixture f;
  f.add_model();
  f.drop(0, 90, 80);
  Gatekeeper gk(f.catalog, f.backends, f.config());
  CHECK(gk.poll_once({"plots"}).at(0).decision == Decision::Alarm);
}

TEST_CASE("corrupt images are recorded with a note") {
  Fixture f;
  f.add_model();
  const auto p = layout_path(f.base, "RunPeriod-2020-08", 70000,
                             layout_filename("occ", 1598486400));
  write_file(p, std::vector<std::uint8_t>{1, 2, 3, 4});
  Gatekeeper gk(f.catalog, f.backends, f.config());
  const auto recs = gk.poll_once({"plots"});
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].decision == Decision::NoModel);
  CHECK(recs[0].note.rfind("CorruptImage", 0) == 0);
}

TEST_CASE("poll_once: every image exactly once") {
  Fixture f;
  f.add_model();
  Gatekeeper gk(f.catalog, f.backends, f.config());
  CHECK(gk.poll_once({"plots"}).empty());
  for (int i = 0; i < 3; ++i) f.drop(200, 10, 10);
  CHECK(gk.poll_once({"plots"}).size() == 3);
  CHECK(gk.poll_once({"plots"}).empty());
  f.drop(200, 10, 10);
  CHECK(gk.poll_once({"plots"}).size() == 1);
  CHECK(f.catalog.operational_count() == 4);

  // An unreachable root is skipped, not fatal.
  f.catalog.add_root("gone", (f.dir.path() / "nope").string());
  f.drop(200, 10, 10);
  CHECK(gk.poll_once({"gone", "plots", "unknown"}).size() == 1);
}

TEST_CASE("reload picks up new models and thresholds") {
  Fixture f;
  Gatekeeper gk(f.catalog, f.backends, f.config());
  f.drop(10, 200, 10);
  CHECK(gk.poll_once({"plots"}).at(0).decision == Decision::NoModel);
  const auto model = f.add_model();
  f.drop(10, 200, 10);
  CHECK(gk.poll_once({"plots"}).at(0).decision == Decision::Alarm);
  f.catalog.put_thresholds({model, 0.05, {{"Good", 0.0}, {"Bad", 0.99}, {"NoData", 0.0}}, {}});
  f.drop(10, 200, 10);
  CHECK(gk.poll_once({"plots"}).at(0).decision == Decision::Flagged);
}

TEST_CASE("latest_status") {
  Fixture f;
  f.add_model();
  Gatekeeper gk(f.catalog, f.backends, f.config());
  CHECK(gk.latest_status().empty());
  f.drop(200, 10, 10);
  gk.poll_once({"plots"});
  f.clk.advance(60);
  f.drop(10, 200, 10);
  f.drop(10, 10, 200, "cdc");
  gk.poll_once({"plots"});
  const auto status = gk.latest_status();
  REQUIRE(status.size() == 2);
  CHECK(status[0].plot_type == "cdc");
  CHECK(status[0].decision == Decision::NoModel);
  CHECK_FALSE(status[0].highlight);
  CHECK(status[1].plot_type == "occ");
  CHECK(status[1].decision == Decision::Alarm);
  CHECK(status[1].predicted_class == "Bad");
  CHECK(status[1].highlight);
}

TEST_CASE("trailing_view") {
  Fixture f;
  Gatekeeper gk(f.catalog, f.backends, f.config());
  OperationalRecord r;
  r.plot_type = "occ";
  r.image_id = f.catalog.register_image("plots", "P", 1, "occ", "a.png", 0).image_id;
  const Timestamp now = f.clk.now();
  struct Row {
    Timestamp age;
    Decision d;
  };
  const std::vector<Row> rows{{25 * 3600, Decision::Alarm}, {23 * 3600, Decision::Alarm},
                              {600, Decision::Flagged},     {300, Decision::Ok},
                              {60, Decision::NoModel},      {24 * 3600, Decision::Flagged}};
  for (const auto& row : rows) {
    r.decided_at = now - row.age;
    r.decision = row.d;
    f.catalog.insert_operational(r);
  }
  const auto view = gk.trailing_view();
  REQUIRE(view.size() == 3);
  CHECK(view[0].decided_at == now - 600);
  CHECK(view[1].decided_at == now - 23 * 3600);
  CHECK(view[2].decided_at == now - 24 * 3600);
  CHECK(gk.trailing_view(std::chrono::hours(1)).size() == 1);
  CHECK_THROWS_AS(gk.trailing_view(std::chrono::seconds(0)), Error);

  // Brute-force oracle over arm B for random windows.
  Rng rng(4);
  const auto all = f.catalog.operational_records();
  for (int i = 0; i < 20; ++i) {
    const auto w = std::chrono::seconds(1 + rng.below(30 * 3600));
    std::size_t expected = 0;
    for (const auto& rec : all)
      if ((rec.decision == Decision::Alarm || rec.decision == Decision::Flagged) &&
          rec.decided_at >= now - w.count() && rec.decided_at <= now)
        ++expected;
    CHECK(gk.trailing_view(w).size() == expected);
  }
}

TEST_CASE("sampled_queue is the join of sampled flags and missing labels") {
  Fixture f;
  for (int i = 0; i < 80; ++i) f.drop(200, 10, 10);
  Gatekeeper gk(f.catalog, f.backends, f.config(0.3, 5));
  const auto recs = gk.poll_once({"plots"});
  Rng rng(2);
  for (const auto& r : recs)
    if (rng.below(3) == 0) f.catalog.record_label(r.image_id, "Good", "u");
  std::vector<ImageId> expected;
  for (const auto& r : recs)
    if (r.sampled && !f.catalog.effective_label(r.image_id)) expected.push_back(r.image_id);
  CHECK_FALSE(expected.empty());
  CHECK(gk.sampled_queue() == expected);
  f.catalog.record_label(expected.front(), "Bad", "u");
  CHECK(gk.sampled_queue().size() == expected.size() - 1);

  Gatekeeper none(f.catalog, f.backends, f.config(0.0));
  for (int i = 0; i < 20; ++i) f.drop(200, 10, 10);
  for (const auto& r : none.poll_once({"plots"})) CHECK_FALSE(r.sampled);
}

TEST_CASE("operational log") {
  Fixture f;
  f.add_model();
  auto cfg = f.config();
  cfg.log_path = f.dir.path() / "logs" / "ops.log";
  {
    Gatekeeper gk(f.catalog, f.backends, cfg);
    f.drop(10, 200, 10);
    f.drop(200, 10, 10);
    gk.poll_once({"plots"});
  }
  std::ifstream in(cfg.log_path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].find("\tocc\tBad\t") != std::string::npos);
  CHECK(lines[0].find("\tAlarm\t") != std::string::npos);
  CHECK(lines[1].find("\tOk\t") != std::string::npos);
}

TEST_CASE("watch processes dropped files until stopped") {
  Fixture f;
  f.add_model();
  auto cfg = f.config();
  cfg.poll_interval = std::chrono::seconds(1);
  Gatekeeper gk(f.catalog, f.backends, cfg);
  std::atomic<int> seen{0};
  std::jthread worker([&](std::stop_token st) {
    gk.watch({"plots"}, st, [&](const OperationalRecord&) { ++seen; });
  });
  f.drop(10, 200, 10);
  f.drop(10, 200, 10);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while (seen < 2 && std::chrono::steady_clock::now() < deadline)
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  CHECK(seen == 2);
  const auto t0 = std::chrono::steady_clock::now();
  worker.request_stop();
  worker.join();
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::milliseconds(900));
  CHECK(f.catalog.operational_count() == 2);
}

TEST_CASE("status line format") {
  OperationalRecord r;
  r.image_id = 7;
  r.plot_type = "occ";
  r.predicted_class = "Bad";
  r.confidence = 0.5;
  r.decision = Decision::Alarm;
  r.decided_at = 1598498100;
  CHECK(status_line(r) == "2020-08-27T03:15:00Z\t7\tocc\tBad\t0.500000\tAlarm\tfalse");
}

}  // TEST_SUITE
