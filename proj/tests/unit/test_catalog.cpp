#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "hydra/catalog.hpp"
#include "hydra/error.hpp"
#include "hydra/layout.hpp"
#include "hydra/rng.hpp"
#include "test_support.hpp"

using namespace hydra;
using hydra::testing::ManualClock;
using hydra::testing::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected hydra::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("catalog") {

TEST_CASE("register_image is idempotent per tuple") {
  Catalog c(":memory:");
  c.add_root("data", "/data");
  const auto a = c.register_image("data", "RunPeriod-2020-01", 12345, "fcal_occupancy",
                                  "fcal_occupancy_20200827T031500Z.png", 1598498100);
  const auto b = c.register_image("data", "RunPeriod-2020-01", 12345, "fcal_occupancy",
                                  "fcal_occupancy_20200827T031500Z.png", 1598498100);
  CHECK(a.image_id == b.image_id);
  CHECK(c.image_count() == 1);
  CHECK(a.run_number == 12345);
  for (int i = 0; i < 5; ++i)
    c.register_image("data", "RunPeriod-2020-01", 12345, "fcal_occupancy", "x.png", 0);
  CHECK(c.image_count() == 2);
}

TEST_CASE("register_image rejects bad tuples") {
  Catalog c(":memory:");
  c.add_root("data", "/data");
  CHECK(code_of([&] { c.register_image("data", "P", 0, "p", "p.png", 0); }) ==
        ErrorCode::MalformedRunNumber);
  CHECK(code_of([&] { c.register_image("data", "P", -4, "p", "p.png", 0); }) ==
        ErrorCode::MalformedRunNumber);
  CHECK(code_of([&] { c.register_image("nope", "P", 1, "p", "p.png", 0); }) ==
        ErrorCode::UnknownRoot);
  CHECK(c.image_count() == 0);
}

TEST_CASE("resolve_path applies the layout rule") {
  Catalog c(":memory:");
  c.add_root("data", "/data");
  const auto a = c.register_image("data", "RunPeriod-2020-01", 12345, "occ", "occ.png", 0);
  CHECK(c.resolve_path(a.image_id) == "/data/RunPeriod-2020-01/Run012345/occ.png");
  const auto b = c.register_image("data", "RunPeriod-2020-01", 1, "occ", "occ.png", 0);
  CHECK(c.resolve_path(b.image_id).parent_path().filename() == "Run000001");
  CHECK(code_of([&] { c.resolve_path(999); }) == ErrorCode::UnknownImage);
}

TEST_CASE("resolve_path and layout parsing round-trip") {
  Catalog c(":memory:");
  c.add_root("data", "/srv/plots");
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const std::string period = "RunPeriod-20" + std::to_string(10 + rng.below(15));
    const auto run = std::int64_t(1 + rng.below(999999));
    const std::string name = "plot" + std::to_string(rng.below(7)) + ".png";
    const auto ref = c.register_image("data", period, run, "plot", name, 0);
    const auto path = c.resolve_path(ref.image_id);
    const auto entry = parse_layout(path.lexically_relative("/srv/plots"));
    REQUIRE(entry);
    CHECK(entry->run_period == period);
    CHECK(entry->run_number == run);
    CHECK(entry->filename == name);
    const auto back = c.find_image_by_path(path);
    REQUIRE(back);
    CHECK(back->image_id == ref.image_id);
  }
}

TEST_CASE("labels: latest wins, ties by label id, append-only") {
  ManualClock clk;
  Catalog c(":memory:", clk.clock());
  c.add_root("data", "/data");
  const auto x = c.register_image("data", "P", 1, "occ", "a.png", 0);
  c.record_label(x.image_id, "Bad", "alice");
  clk.advance(5);
  c.record_label(x.image_id, "Good", "bob");
  CHECK(c.effective_label(x.image_id) == "Good");

  // Same timestamp: the later label id wins.
  c.record_label(x.image_id, "NoData", "alice");
  c.record_label(x.image_id, "Bad", "bob");
  CHECK(c.effective_label(x.image_id) == "Bad");
  CHECK(c.labels_for(x.image_id).size() == 4);
  CHECK(c.label_count() == 4);

  CHECK(code_of([&] { c.record_label(x.image_id, "Purple", "alice"); }) ==
        ErrorCode::UnknownClass);
  CHECK(code_of([&] { c.record_label(4242, "Good", "alice"); }) == ErrorCode::UnknownImage);
  CHECK(c.label_count() == 4);
}

TEST_CASE("label count equals number of record_label calls") {
  Catalog c(":memory:");
  c.add_root("data", "/data");
  std::vector<ImageId> ids;
  for (int i = 0; i < 10; ++i)
    ids.push_back(c.register_image("data", "P", 1, "occ", std::to_string(i) + ".png", i).image_id);
  Rng rng(5);
  const std::vector<std::string> classes{"Good", "Bad", "NoData"};
  for (int n = 1; n <= 200; ++n) {
    c.record_label(ids[rng.below(ids.size())], classes[rng.below(3)], "u");
    REQUIRE(c.label_count() == std::size_t(n));
  }
}

TEST_CASE("batch labels are all-or-nothing") {
  Catalog c(":memory:");
  c.add_root("data", "/data");
  const auto a = c.register_image("data", "P", 1, "occ", "a.png", 0);
  const std::vector<ImageId> ids{a.image_id, 999};
  CHECK(code_of([&] { c.record_labels(ids, "Good", "u"); }) == ErrorCode::UnknownImage);
  CHECK(c.label_count() == 0);
}

TEST_CASE("custom class sets") {
  Catalog c(":memory:");
  c.add_root("data", "/data");
  c.set_class_set({"cdc", {"Good", "Hot", "Cold"}, {"Hot", "Cold"}});
  const auto x = c.register_image("data", "P", 1, "cdc", "cdc.png", 0);
  CHECK(code_of([&] { c.record_label(x.image_id, "Bad", "u"); }) == ErrorCode::UnknownClass);
  c.record_label(x.image_id, "Hot", "u");
  CHECK(c.class_set("cdc").alarm_classes == std::vector<std::string>{"Hot", "Cold"});
  CHECK(c.class_set("other").classes == ClassSet::defaults("other").classes);
  CHECK(c.has_plot_type("cdc"));
  CHECK_FALSE(c.has_plot_type("other"));
}

TEST_CASE("query_images") {
  Catalog c(":memory:");
  c.add_root("data", "/data");

  SUBCASE("empty catalog") {
    CHECK(c.query_images({}).empty());
    ImageQuery q;
    q.labeled = true;
    CHECK(c.query_images(q).empty());
  }

  SUBCASE("unlabeled filter keeps chronological order") {
    const auto i1 = c.register_image("data", "P", 1, "occ", "c.png", 30);
    const auto i2 = c.register_image("data", "P", 1, "occ", "a.png", 10);
    const auto i3 = c.register_image("data", "P", 1, "occ", "b.png", 20);
    c.record_label(i3.image_id, "Good", "u");
    ImageQuery q;
    q.labeled = false;
    const auto rows = c.query_images(q);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].image.image_id == i2.image_id);
    CHECK(rows[1].image.image_id == i1.image_id);
    CHECK_FALSE(rows[0].label);
  }

  SUBCASE("filters match a linear scan") {
    Rng rng(2024);
    std::vector<ImageRef> all;
    std::map<ImageId, std::string> labels;
    const std::vector<std::string> periods{"RunPeriod-2019-01", "RunPeriod-2020-01"};
    const std::vector<std::string> plots{"occ", "cdc"};
    for (int i = 0; i < 300; ++i) {
      const auto ref = c.register_image(
          "data", periods[rng.below(2)], std::int64_t(1 + rng.below(400)),
          plots[rng.below(2)], "f" + std::to_string(i) + ".png",
          Timestamp(rng.below(100000)));
      all.push_back(ref);
      if (rng.below(3) == 0) {
        c.record_label(ref.image_id, "Bad", "u");
        labels[ref.image_id] = "Bad";
      }
    }
    for (int trial = 0; trial < 40; ++trial) {
      ImageQuery q;
      if (rng.below(2)) q.plot_type = plots[rng.below(2)];
      if (rng.below(2)) q.run_period = periods[rng.below(2)];
      std::int64_t lo = 100, hi = 200;
      if (trial > 0) {
        lo = std::int64_t(rng.below(400));
        hi = lo + std::int64_t(rng.below(200));
      }
      q.run_range = std::pair{lo, hi};
      if (rng.below(2)) q.labeled = rng.below(2) == 1;
      Timestamp t0 = Timestamp(rng.below(60000)), t1 = t0 + Timestamp(rng.below(60000));
      if (rng.below(2)) q.time_range = std::pair{t0, t1};

      std::vector<ImageRef> expected;
      for (const auto& r : all) {
        if (q.plot_type && r.plot_type != *q.plot_type) continue;
        if (q.run_period && r.run_period != *q.run_period) continue;
        if (r.run_number < lo || r.run_number > hi) continue;
        if (q.labeled && labels.contains(r.image_id) != *q.labeled) continue;
        if (q.time_range && (r.captured_at < t0 || r.captured_at > t1)) continue;
        expected.push_back(r);
      }
      std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
        return std::pair(a.captured_at, a.image_id) < std::pair(b.captured_at, b.image_id);
      });
      const auto rows = c.query_images(q);
      REQUIRE(rows.size() == expected.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].image == expected[i]);
        const auto it = labels.find(expected[i].image_id);
        CHECK(rows[i].label == (it == labels.end() ? std::nullopt
                                                   : std::optional<std::string>(it->second)));
      }
    }
  }

  SUBCASE("labeled partitions the catalog") {
    for (int i = 0; i < 40; ++i) {
      const auto r = c.register_image("data", "P", 1, "occ", std::to_string(i), i);
      if (i % 3 == 0) c.record_label(r.image_id, "Good", "u");
    }
    ImageQuery yes, no;
    yes.labeled = true;
    no.labeled = false;
    std::set<ImageId> ids;
    for (const auto& r : c.query_images(yes)) ids.insert(r.image.image_id);
    for (const auto& r : c.query_images(no)) CHECK(ids.insert(r.image.image_id).second);
    CHECK(ids.size() == 40);
  }

  SUBCASE("paging") {
    for (int i = 0; i < 7; ++i) c.register_image("data", "P", 1, "occ", std::to_string(i), i);
    ImageQuery q;
    q.page_size = 3;
    q.page_index = 2;
    CHECK(c.query_images(q).size() == 1);
    q.descending = true;
    q.page_index = 0;
    const auto rows = c.query_images(q);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].image.captured_at == 6);
  }
}

TEST_CASE("scan registers the on-disk layout") {
  TempDir dir;
  const auto base = dir.path() / "plots";
  const auto img = hydra::testing::solid(4, 3, 10, 20, 30);
  hydra::testing::write_plot(base, "RunPeriod-2020-08", 70000, "fcal_occupancy", 1598486400, img);
  hydra::testing::write_plot(base, "RunPeriod-2020-08", 70001, "fcal_occupancy", 1598486460, img);
  // Outside the layout: ignored.
  write_file(base / "stray.png", encode_png(img));
  write_file(base / "RunPeriod-2020-08" / "Run70002" / "x.png", encode_png(img));
  write_file(base / "RunPeriod-2020-08" / "Run070002" / "notes.txt", std::vector<std::uint8_t>{1});
  // No timestamp token: falls back to the file's mtime.
  write_file(base / "RunPeriod-2020-08" / "Run070002" / "cdc_hits.png", encode_png(img));

  Catalog c(":memory:");
  c.add_root("plots", base.string());
  const auto added = c.scan("plots");
  CHECK(added.size() == 3);
  CHECK(c.scan("plots").empty());
  CHECK(c.image_count() == 3);

  ImageQuery q;
  q.plot_type = "fcal_occupancy";
  const auto rows = c.query_images(q);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].image.captured_at == 1598486400);
  CHECK(rows[0].image.run_number == 70000);
  CHECK(c.plot_types() == std::vector<std::string>{"cdc_hits", "fcal_occupancy"});

  q.plot_type = "cdc_hits";
  const auto cdc = c.query_images(q);
  REQUIRE(cdc.size() == 1);
  CHECK(cdc[0].image.captured_at > 1598486460);

  c.add_root("gone", (dir.path() / "missing").string());
  CHECK(code_of([&] { c.scan("gone"); }) == ErrorCode::RootUnreachable);
  CHECK(code_of([&] { c.scan("nope"); }) == ErrorCode::UnknownRoot);
}

TEST_CASE("roots") {
  Catalog c(":memory:");
  CHECK(code_of([&] { c.add_root("r", "relative/path"); }) == ErrorCode::InvalidArgument);
  c.add_root("r", "/a");
  c.add_root("r", "/a");
  CHECK(c.roots().size() == 1);
  CHECK(code_of([&] { c.add_root("r", "/b"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("users, permissions, tokens") {
  Catalog c(":memory:");
  c.upsert_user("root", true);
  c.upsert_user("ann", false);
  CHECK(c.is_admin("root"));
  CHECK_FALSE(c.is_admin("ann"));
  CHECK(c.add_permission("ann", "occ"));
  CHECK_FALSE(c.add_permission("ann", "occ"));
  CHECK(c.permission_count() == 1);
  const auto t = c.issue_token("ann");
  CHECK(t.size() >= 32);
  CHECK(c.user_for_token(t) == "ann");
  CHECK_FALSE(c.user_for_token("bogus"));
  CHECK(c.issue_token("ann") != t);
}

TEST_CASE("models, inferences, thresholds") {
  ManualClock clk;
  Catalog c(":memory:", clk.clock());
  c.add_root("data", "/data");
  const auto img = c.register_image("data", "P", 1, "occ", "a.png", 0);
  ModelRecord m;
  m.plot_type = "occ";
  m.backend = "softmax-v1";
  m.class_names = {"Good", "Bad", "NoData"};
  m.blob = {1, 2, 3};
  m.created_at = 100;
  m.validation_image_ids = {img.image_id};
  const auto id1 = c.insert_model(m);
  m.created_at = 200;
  const auto id2 = c.insert_model(m);
  CHECK(c.latest_model("occ") == id2);
  CHECK_FALSE(c.latest_model("cdc"));
  const auto list = c.models();
  REQUIRE(list.size() == 2);
  CHECK(list[0].model_id == id2);
  const auto back = c.model(id1);
  CHECK(back.blob == m.blob);
  CHECK(back.class_names == m.class_names);
  CHECK(back.validation_image_ids == m.validation_image_ids);
  CHECK(code_of([&] { c.model(77); }) == ErrorCode::UnknownModel);

  InferenceRecord r{img.image_id, id1, {{"Good", 0.7}, {"Bad", 0.2}, {"NoData", 0.1}}, "Good",
                    0.7, 5};
  c.upsert_inferences(std::span(&r, 1));
  r.confidence = 0.8;
  c.upsert_inferences(std::span(&r, 1));
  CHECK(c.inference_count(id1) == 1);
  CHECK(c.inferences(id1).front() == r);

  ThresholdTable t{id1, 0.05, {{"Bad", 0.8}, {"Good", 0.0}, {"NoData", 0.0}}, {}};
  c.put_thresholds(t);
  CHECK(c.thresholds(id1) == t);
  CHECK_FALSE(c.thresholds(id2));
}

TEST_CASE("operational arm") {
  ManualClock clk;
  Catalog c(":memory:", clk.clock());
  c.add_root("data", "/data");
  const auto a = c.register_image("data", "P", 1, "occ", "a.png", 10);
  const auto b = c.register_image("data", "P", 1, "occ", "b.png", 20);
  const auto d = c.register_image("data", "P", 1, "cdc", "d.png", 30);
  CHECK(c.unprocessed_images("data").size() == 3);

  OperationalRecord r;
  r.image_id = a.image_id;
  r.plot_type = "occ";
  r.decision = Decision::Ok;
  r.sampled = true;
  r.decided_at = 100;
  const auto stored = c.insert_operational(r);
  CHECK(stored.record_id > 0);
  r.image_id = b.image_id;
  r.decision = Decision::Alarm;
  r.decided_at = 200;
  r.sampled = false;
  c.insert_operational(r);
  r.image_id = d.image_id;
  r.plot_type = "cdc";
  r.decision = Decision::NoModel;
  r.decided_at = 150;
  c.insert_operational(r);

  CHECK(c.unprocessed_images("data").empty());
  CHECK(c.operational_count() == 3);
  const auto latest = c.latest_per_plot_type();
  REQUIRE(latest.size() == 2);
  CHECK(latest[0].plot_type == "cdc");
  CHECK(latest[1].image_id == b.image_id);

  OperationalQuery q;
  q.decisions = {Decision::Alarm};
  CHECK(c.operational_records(q).size() == 1);
  q.decisions.clear();
  q.decided_range = std::pair<Timestamp, Timestamp>{120, 250};
  CHECK(c.operational_records(q).size() == 2);

  CHECK(c.sampled_unlabeled() == std::vector<ImageId>{a.image_id});
  c.record_label(a.image_id, "Good", "u");
  CHECK(c.sampled_unlabeled().empty());
}

TEST_CASE("catalog persists across reopen") {
  TempDir dir;
  const auto db = (dir.path() / "h.db").string();
  ImageId id = 0;
  {
    Catalog c(db);
    c.add_root("data", "/data");
    id = c.register_image("data", "P", 3, "occ", "a.png", 0).image_id;
    c.record_label(id, "Bad", "u");
  }
  Catalog c(db);
  CHECK(c.image(id).run_number == 3);
  CHECK(c.effective_label(id) == "Bad");
}

}  // TEST_SUITE
