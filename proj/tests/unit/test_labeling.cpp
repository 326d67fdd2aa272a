#include <doctest.h>

#include <algorithm>
#include <set>

#include "hydra/error.hpp"
#include "hydra/labeling.hpp"
#include "hydra/rng.hpp"

using namespace hydra;

namespace {

struct Fixture {
  Catalog catalog{":memory:"};
  Labeling labeling{catalog};

  Fixture() {
    catalog.add_root("data", "/data");
    catalog.upsert_user("admin", true);
    catalog.upsert_user("ann", false);
    catalog.upsert_user("bob", false);
  }

  std::vector<ImageRef> add_images(const std::string& plot, int n, Timestamp t0 = 1000,
                                   Timestamp step = 60) {
    std::vector<ImageRef> out;
    for (int i = 0; i < n; ++i)
      out.push_back(catalog.register_image("data", "P", 1 + i / 20, plot,
                                           plot + "_" + std::to_string(i) + ".png",
                                           t0 + i * step));
    return out;
  }
};

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

TEST_SUITE("labeling") {

TEST_CASE("grid pagination") {
  Fixture f;
  const auto imgs = f.add_images("occ", 7);
  const auto page = f.labeling.get_unlabeled_grid("occ", 2, 3);
  REQUIRE(page.items.size() == 1);
  CHECK(page.items[0].image == imgs[6]);
  CHECK(page.items[0].thumbnail_url == "/images/" + std::to_string(imgs[6].image_id) + "/thumb");
  CHECK(code_of([&] { f.labeling.get_unlabeled_grid("nope", 0, 3); }) ==
        ErrorCode::UnknownPlotType);
  CHECK(code_of([&] { f.labeling.get_unlabeled_grid("occ", 0, 0); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("grid pages partition the unlabeled images") {
  Fixture f;
  Rng rng(3);
  auto imgs = f.add_images("occ", 53);
  f.add_images("cdc", 10);
  std::set<ImageId> labeled;
  for (const auto& r : imgs)
    if (rng.below(4) == 0) {
      f.catalog.record_label(r.image_id, "Good", "x");
      labeled.insert(r.image_id);
    }
  // Oracle: chronological unlabeled images of the plot type.
  std::vector<ImageRef> expected;
  for (const auto& r : imgs)
    if (!labeled.contains(r.image_id)) expected.push_back(r);
  std::stable_sort(expected.begin(), expected.end(),
                   [](const auto& a, const auto& b) { return a.captured_at < b.captured_at; });

  for (std::size_t size : {1u, 4u, 6u, 24u, 100u}) {
    std::vector<ImageRef> seen;
    for (std::size_t p = 0;; ++p) {
      const auto page = f.labeling.get_unlabeled_grid("occ", p, size);
      CHECK(page.items.size() <= size);
      if (page.items.empty()) break;
      for (const auto& it : page.items) seen.push_back(it.image);
    }
    CHECK(seen == expected);
  }
}

TEST_CASE("all labeled gives an empty page") {
  Fixture f;
  for (const auto& r : f.add_images("occ", 5)) f.catalog.record_label(r.image_id, "Good", "x");
  CHECK(f.labeling.get_unlabeled_grid("occ", 0, 24).items.empty());
}

TEST_CASE("apply_label permissions") {
  Fixture f;
  const auto imgs = f.add_images("occ", 3);
  CHECK(code_of([&] { f.labeling.apply_label("ann", imgs[0].image_id, "Bad"); }) ==
        ErrorCode::PermissionDenied);
  CHECK(f.catalog.label_count() == 0);

  CHECK(code_of([&] { f.labeling.grant_permission("bob", "ann", "occ"); }) ==
        ErrorCode::NotAdmin);
  f.labeling.grant_permission("admin", "ann", "occ");
  f.labeling.grant_permission("admin", "ann", "occ");
  CHECK(f.catalog.permission_count() == 1);

  const auto rec = f.labeling.apply_label("ann", imgs[0].image_id, "Bad");
  CHECK(rec.labeler == "ann");
  CHECK(f.catalog.effective_label(imgs[0].image_id) == "Bad");
  const auto grid = f.labeling.get_unlabeled_grid("occ", 0, 24);
  CHECK(std::none_of(grid.items.begin(), grid.items.end(),
                     [&](const auto& it) { return it.image.image_id == imgs[0].image_id; }));
  CHECK(code_of([&] { f.labeling.apply_label("ann", imgs[1].image_id, "Purple"); }) ==
        ErrorCode::UnknownClass);
  CHECK(code_of([&] { f.labeling.apply_label("ann", 9999, "Bad"); }) ==
        ErrorCode::UnknownImage);
}

TEST_CASE("range labels cover the timestamp interval") {
  Fixture f;
  f.labeling.grant_permission("admin", "ann", "occ");
  const auto imgs = f.add_images("occ", 10);

  SUBCASE("four images") {
    CHECK(f.labeling.apply_range_label("ann", imgs[2].image_id, imgs[5].image_id, "Bad") == 4);
    for (int i = 0; i < 10; ++i)
      CHECK(f.catalog.effective_label(imgs[i].image_id).has_value() == (i >= 2 && i <= 5));
  }
  SUBCASE("degenerate interval") {
    CHECK(f.labeling.apply_range_label("ann", imgs[7].image_id, imgs[7].image_id, "Good") == 1);
  }
  SUBCASE("argument order does not matter") {
    CHECK(f.labeling.apply_range_label("ann", imgs[8].image_id, imgs[3].image_id, "Bad") == 6);
  }
  SUBCASE("relabels already-labeled images") {
    f.catalog.record_label(imgs[4].image_id, "Good", "x");
    f.labeling.apply_range_label("ann", imgs[3].image_id, imgs[5].image_id, "NoData");
    CHECK(f.catalog.effective_label(imgs[4].image_id) == "NoData");
  }
}

TEST_CASE("range label errors") {
  Fixture f;
  f.labeling.grant_permission("admin", "ann", "occ");
  const auto occ = f.add_images("occ", 3);
  const auto cdc = f.add_images("cdc", 3);
  CHECK(code_of([&] {
          f.labeling.apply_range_label("ann", occ[0].image_id, cdc[2].image_id, "Bad");
        }) == ErrorCode::PlotTypeMismatch);
  CHECK(code_of([&] {
          f.labeling.apply_range_label("ann", cdc[0].image_id, cdc[2].image_id, "Bad");
        }) == ErrorCode::PermissionDenied);
  CHECK(code_of([&] {
          f.labeling.apply_range_label("ann", occ[0].image_id, occ[2].image_id, "Purple");
        }) == ErrorCode::UnknownClass);
  CHECK(f.catalog.label_count() == 0);
}

TEST_CASE("range labels match a brute-force interval scan") {
  Fixture f;
  f.labeling.grant_permission("admin", "ann", "occ");
  Rng rng(99);
  std::vector<ImageRef> imgs;
  for (int i = 0; i < 120; ++i)
    imgs.push_back(f.catalog.register_image("data", "P", 1, i % 4 ? "occ" : "cdc",
                                            "f" + std::to_string(i),
                                            Timestamp(rng.below(500))));
  std::vector<ImageRef> occ;
  std::copy_if(imgs.begin(), imgs.end(), std::back_inserter(occ),
               [](const auto& r) { return r.plot_type == "occ"; });
  for (int trial = 0; trial < 30; ++trial) {
    const auto& a = occ[rng.below(occ.size())];
    const auto& b = occ[rng.below(occ.size())];
    const auto lo = std::min(a.captured_at, b.captured_at);
    const auto hi = std::max(a.captured_at, b.captured_at);
    const auto expected = std::count_if(occ.begin(), occ.end(), [&](const auto& r) {
      return r.captured_at >= lo && r.captured_at <= hi;
    });
    const auto before = f.catalog.label_count();
    CHECK(f.labeling.apply_range_label("ann", a.image_id, b.image_id, "Bad") ==
          std::size_t(expected));
    CHECK(f.catalog.label_count() - before == std::size_t(expected));
  }
}

TEST_CASE("no label is ever written without permission") {
  Fixture f;
  f.labeling.grant_permission("admin", "ann", "occ");
  f.labeling.grant_permission("admin", "bob", "cdc");
  const auto occ = f.add_images("occ", 15);
  const auto cdc = f.add_images("cdc", 15);
  std::vector<ImageRef> all = occ;
  all.insert(all.end(), cdc.begin(), cdc.end());
  const std::vector<std::string> users{"ann", "bob", "admin", "ghost"};
  Rng rng(17);
  for (int i = 0; i < 300; ++i) {
    const auto& user = users[rng.below(users.size())];
    const auto& a = all[rng.below(all.size())];
    const auto& b = all[rng.below(all.size())];
    try {
      if (rng.below(2))
        f.labeling.apply_label(user, a.image_id, "Good");
      else
        f.labeling.apply_range_label(user, a.image_id, b.image_id, "Bad");
    } catch (const Error&) {
    }
  }
  for (const auto& img : all)
    for (const auto& rec : f.catalog.labels_for(img.image_id))
      CHECK(f.catalog.has_permission(rec.labeler, img.plot_type));
}

}  // TEST_SUITE
