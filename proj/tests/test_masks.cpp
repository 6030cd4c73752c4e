#include <algorithm>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "intent/error.hpp"
#include "intent/masks.hpp"

using namespace intent;
namespace fs = std::filesystem;

namespace {

Raster box(int rows, int cols, int top, int left, int h, int w) {
  Raster r(rows, cols);
  for (int y = top; y < top + h; ++y) {
    for (int x = left; x < left + w; ++x) r(y, x) = 1;
  }
  return r;
}

Raster random_raster(int rows, int cols, std::mt19937_64& rng, double p = 0.4) {
  std::bernoulli_distribution b(p);
  Raster r(rows, cols);
  for (auto& v : r.data()) v = b(rng) ? 1 : 0;
  return r;
}

bool subset(const Raster& a, const Raster& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.data()[i] && !b.data()[i]) return false;
  }
  return true;
}

std::vector<SegmentRegion> random_regions(std::mt19937_64& rng, int n, int rows, int cols) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SegmentRegion> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(make_region(random_raster(rows, cols, rng, u(rng)), i, u(rng) < 0.5 ? RegionKind::Thing
                                                                                         : RegionKind::Stuff,
                              u(rng)));
  }
  return out;
}

}  // namespace

TEST_CASE("area fraction") {
  CHECK(area_fraction(box(10, 10, 0, 0, 3, 3)) == doctest::Approx(0.09));
  CHECK(make_region(box(4, 4, 0, 0, 2, 4), 1, RegionKind::Thing, 0.9).area_fraction == 0.5);
}

TEST_CASE("panoptic aggregation examples") {
  auto empty = aggregate_masks_panoptic({}, 10, 10);
  CHECK(empty.object == Raster(10, 10));
  CHECK(empty.context == Raster(10, 10));
  CHECK(empty.mode == MaskMode::Panoptic);

  auto low = aggregate_masks_panoptic({make_region(box(10, 10, 0, 0, 5, 10), 1, RegionKind::Thing, 0.69)}, 10, 10);
  CHECK(low.object == Raster(10, 10));

  auto small = aggregate_masks_panoptic({make_region(box(10, 10, 0, 0, 3, 3), 1, RegionKind::Thing, 0.9)}, 10, 10);
  CHECK(small.object == Raster(10, 10));

  PanopticConfig stuff_only;
  stuff_only.area_scope = AreaFilterScope::StuffOnly;
  auto kept =
      aggregate_masks_panoptic({make_region(box(10, 10, 0, 0, 3, 3), 1, RegionKind::Thing, 0.9)}, 10, 10, stuff_only);
  CHECK(kept.object == box(10, 10, 0, 0, 3, 3));

  auto at_tau = aggregate_masks_panoptic({make_region(box(10, 10, 0, 0, 5, 5), 1, RegionKind::Thing, 0.7)}, 10, 10);
  CHECK(at_tau.object == box(10, 10, 0, 0, 5, 5));
}

TEST_CASE("things occlude stuff") {
  const auto thing = make_region(box(8, 8, 0, 0, 4, 4), 1, RegionKind::Thing, 0.9);
  const auto stuff = make_region(box(8, 8, 2, 2, 6, 6), 2, RegionKind::Stuff, 0.9);
  const auto m = aggregate_masks_panoptic({thing, stuff}, 8, 8);
  CHECK(m.object == thing.raster);
  CHECK(m.context(2, 2) == 0);
  CHECK(m.context(5, 5) == 1);
}

TEST_CASE("panoptic outputs are disjoint and monotone in tau_p") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto regions = random_regions(rng, 6, 6, 7);
    PanopticConfig hi, lo;
    hi.tau_p = 0.7;
    lo.tau_p = 0.4;
    const auto a = aggregate_masks_panoptic(regions, 6, 7, hi);
    const auto b = aggregate_masks_panoptic(regions, 6, 7, lo);
    for (std::size_t i = 0; i < a.object.size(); ++i) {
      CHECK_FALSE((a.object.data()[i] && a.context.data()[i]));
      CHECK_FALSE((b.object.data()[i] && b.context.data()[i]));
    }
    CHECK(subset(a.object, b.object));
    // Stuff can only lose pixels to newly admitted things.
    Raster ctx_or_obj = b.context;
    for (std::size_t i = 0; i < ctx_or_obj.size(); ++i) ctx_or_obj.data()[i] |= b.object.data()[i];
    CHECK(subset(a.context, ctx_or_obj));
  }
}

TEST_CASE("re-aggregating an aggregated pair reproduces it") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const auto regions = random_regions(rng, 5, 6, 6);
    PanopticConfig cfg;
    cfg.min_area = 0.0;
    const auto m = aggregate_masks_panoptic(regions, 6, 6, cfg);
    const auto again = aggregate_masks_panoptic({make_region(m.object, 0, RegionKind::Thing, 1.0),
                                                 make_region(m.context, 1, RegionKind::Stuff, 1.0)},
                                                6, 6, cfg);
    CHECK(again.object == m.object);
    CHECK(again.context == m.context);
  }
}

TEST_CASE("complement aggregation") {
  auto empty = aggregate_masks_complement({}, 4, 4);
  CHECK(empty.object == Raster(4, 4));
  CHECK(empty.context == Raster(4, 4, 1));

  const auto a = make_region(box(10, 10, 0, 0, 5, 5), 1, RegionKind::Thing, 0.8);
  const auto b = make_region(box(10, 10, 2, 2, 5, 5), 2, RegionKind::Thing, 0.7);
  const auto m = aggregate_masks_complement({a, b}, 10, 10);
  Raster expected = a.raster;
  for (std::size_t i = 0; i < expected.size(); ++i) expected.data()[i] |= b.raster.data()[i];
  CHECK(m.object == expected);
  CHECK(m.mode == MaskMode::Complement);

  const auto weak = make_region(box(10, 10, 0, 0, 5, 5), 1, RegionKind::Thing, 0.59);
  CHECK(aggregate_masks_complement({weak}, 10, 10).object == Raster(10, 10));

  const auto stuff = make_region(box(10, 10, 0, 0, 5, 5), 1, RegionKind::Stuff, 0.9);
  CHECK_THROWS_AS(aggregate_masks_complement({stuff}, 10, 10), InputError);
  CHECK_THROWS_AS(aggregate_masks_complement({a}, 9, 10), InputError);
}

TEST_CASE("complement masks sum to one everywhere") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    auto regions = random_regions(rng, 4, 5, 5);
    for (auto& r : regions) r.kind = RegionKind::Thing;
    const auto m = aggregate_masks_complement(regions, 5, 5);
    for (std::size_t i = 0; i < m.object.size(); ++i) CHECK(m.object.data()[i] + m.context.data()[i] == 1);
  }
}

TEST_CASE("longest side resize dimensions") {
  CHECK(longest_side_dims(2560, 1280, 1280) == std::pair{1280, 640});
  CHECK(longest_side_dims(1280, 720, 1280) == std::pair{1280, 720});
  CHECK(longest_side_dims(100, 300, 1280) == std::pair{427, 1280});
  CHECK(longest_side_dims(3, 2, 3) == std::pair{3, 2});
  CHECK_THROWS_AS(longest_side_dims(0, 5, 1280), InputError);

  const Raster r = box(100, 300, 10, 10, 50, 50);
  const Raster big = resize_longest_side(r);
  CHECK(big.rows() == 427);
  CHECK(big.cols() == 1280);
  CHECK(std::all_of(big.data().begin(), big.data().end(), [](auto v) { return v <= 1; }));

  const Image img(3, 2560, 1280, 0.5);
  const Image small = resize_longest_side(img);
  CHECK(small.height() == 1280);
  CHECK(small.width() == 640);
  CHECK(small.at(1, 100, 100) == doctest::Approx(0.5));
  CHECK_THROWS_AS(resize_longest_side(Raster{}), InputError);
}

TEST_CASE("nearest resampling of an exact multiple replicates cells") {
  Raster r(2, 2);
  r(0, 1) = 1;
  const Raster up = resize_nearest(r, 4, 4);
  CHECK(up == box(4, 4, 0, 2, 2, 2));
  CHECK(resize_nearest(up, 2, 2) == r);
}

TEST_CASE("segmentation dump and mask pair round trip") {
  const fs::path dir = fs::temp_directory_path() / "intent_test_masks";
  fs::remove_all(dir);
  std::vector<SegmentRegion> regions{make_region(box(6, 8, 0, 0, 3, 3), 5, RegionKind::Thing, 0.75),
                                     make_region(box(6, 8, 3, 0, 3, 8), 9, RegionKind::Stuff, 0.5)};
  save_segmentation_dump(dir / "dump", regions);
  const auto back = load_segmentation_dump(dir / "dump");
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].raster == regions[i].raster);
    CHECK(back[i].category_id == regions[i].category_id);
    CHECK(back[i].kind == regions[i].kind);
    CHECK(back[i].score == regions[i].score);
    CHECK(back[i].area_fraction == doctest::Approx(regions[i].area_fraction));
  }

  const auto pair = aggregate_masks_complement({regions[0]}, 6, 8);
  save_mask_pair(dir / "masks", pair);
  const auto loaded = load_mask_pair(dir / "masks");
  CHECK(loaded.object == pair.object);
  CHECK(loaded.context == pair.context);

  CHECK_THROWS_AS(load_segmentation_dump(dir / "missing"), DataError);
  fs::remove_all(dir);
}
