#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "anomap/pipeline.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace anomap;

TEST_CASE("postprocess and search configs validate", "[pipeline]") {
  PostprocessConfig p;
  p.median_kernel = 4;
  REQUIRE_THROWS_AS(p.validate(), validation_error);
  p = {};
  p.median_kernel = -1;
  REQUIRE_THROWS_AS(p.validate(), validation_error);
  p = {};
  p.erosion_iterations = -1;
  REQUIRE_THROWS_AS(p.validate(), validation_error);
  REQUIRE_NOTHROW(PostprocessConfig{}.validate());

  ThresholdSearch s;
  s.num_candidates = 1;
  REQUIRE_THROWS_AS(s.validate(), validation_error);
  REQUIRE_NOTHROW(ThresholdSearch{}.validate());
}

TEST_CASE("postprocess_map composes median, erosion and masking",
          "[pipeline]") {
  const AnomalyMap map = testutil::random_volume(9, 8, 7, 55, 0.f, 2.f);
  const Mask3D brain(9, 8, 7, 1); // erodes to a definite 7x6x5 core
  PostprocessConfig cfg;
  cfg.median_kernel = 3;
  cfg.erosion_iterations = 1;

  const AnomalyMap got = postprocess_map(map, brain, cfg);
  const AnomalyMap want =
      masked(median_filter_3d(map, 3), erode_mask(brain, 1));
  REQUIRE(bitwise_equal(got, want));

  cfg.median_before_masking = false;
  const AnomalyMap got2 = postprocess_map(map, brain, cfg);
  const AnomalyMap want2 =
      median_filter_3d(masked(map, erode_mask(brain, 1)), 3);
  REQUIRE(bitwise_equal(got2, want2));

  // The two orders genuinely differ: out-of-mask context leaks into
  // in-mask medians only in the first one.
  REQUIRE_FALSE(bitwise_equal(got, got2));
}

TEST_CASE("postprocess_map rejects mismatched dims", "[pipeline]") {
  REQUIRE_THROWS_AS(
      postprocess_map(AnomalyMap(4, 4, 4), Mask3D(4, 4, 3), PostprocessConfig{}),
      validation_error);
}

TEST_CASE("binarize thresholds strictly and filters components",
          "[pipeline]") {
  AnomalyMap map(8, 4, 4);
  // a 2-voxel blob exactly at threshold, a 2-voxel blob above it
  map(1, 1, 1) = 0.5f;
  map(2, 1, 1) = 0.5f;
  map(5, 1, 1) = 0.8f;
  map(6, 1, 1) = 0.8f;

  PostprocessConfig cfg;
  cfg.min_component_size = 2;
  const Mask3D pred = binarize(map, 0.5, cfg);
  REQUIRE(pred.count_set() == 2);
  REQUIRE(pred(5, 1, 1) == 1);
  REQUIRE(pred(1, 1, 1) == 0); // equality is not above

  cfg.min_component_size = 3;
  REQUIRE(binarize(map, 0.5, cfg).count_set() == 0);

  REQUIRE_THROWS_AS(binarize(map, std::nan(""), cfg), validation_error);
}

TEST_CASE("threshold selection matches the exhaustive oracle", "[pipeline]") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::size_t n_val = 1 + seed % 3;
    std::vector<AnomalyMap> maps;
    std::vector<Mask3D> gts, brains;
    std::size_t gt_total = 0;
    for (std::size_t v = 0; v < n_val; ++v) {
      maps.push_back(testutil::quantized_volume(8, 7, 6, 7000 + seed * 10 + v, 9));
      Mask3D gt = testutil::random_mask(8, 7, 6, 7100 + seed * 10 + v, 0.15);
      gt_total += gt.count_set();
      gts.push_back(std::move(gt));
      brains.emplace_back(8, 7, 6, 1);
    }
    if (gt_total == 0) gts[0].data()[17] = 1;

    PostprocessConfig post;
    post.erosion_iterations = int(seed % 2);
    post.min_component_size = seed % 4;
    ThresholdSearch search;
    search.num_candidates = 2 + int(seed % 30);

    const ThresholdSelection got =
        select_threshold(maps, gts, brains, search, post);
    const oracle::Picked want = oracle::select_threshold(
        maps, gts, brains, search.num_candidates, post);
    REQUIRE(got.threshold == want.threshold);
    REQUIRE(got.dice == want.dice);
  }
}

TEST_CASE("threshold ties resolve toward the larger candidate", "[pipeline]") {
  // 32 pooled scores and 100 candidates, so every order statistic is a
  // candidate: {0.1, 0.5, 0.9}. The 0.5 voxel is an isolated component
  // that the size filter removes, so 0.1 and 0.5 give identical
  // predictions and Dice; the tie must pick 0.5.
  AnomalyMap map(4, 4, 2, {1.f, 1.f, 1.f}, 0.1f);
  map(0, 0, 0) = 0.9f;
  map(1, 0, 0) = 0.9f;
  map(3, 3, 1) = 0.5f;

  Mask3D gt(4, 4, 2);
  gt(0, 0, 0) = 1;
  gt(1, 0, 0) = 1;

  const Mask3D brain(4, 4, 2, 1);
  PostprocessConfig post;
  post.erosion_iterations = 0;
  post.min_component_size = 2;
  ThresholdSearch search;
  search.num_candidates = 100;

  const ThresholdSelection sel = select_threshold(
      std::span(&map, 1), std::span(&gt, 1), std::span(&brain, 1), search, post);
  REQUIRE(sel.dice == 1.0);
  REQUIRE(sel.threshold == Catch::Approx(0.5));
}

TEST_CASE("constant maps collapse to a single candidate", "[pipeline]") {
  const AnomalyMap map(6, 6, 6, {1.f, 1.f, 1.f}, 0.25f);
  Mask3D gt(6, 6, 6);
  gt(3, 3, 3) = 1;
  const Mask3D brain(6, 6, 6, 1);
  PostprocessConfig post;
  post.erosion_iterations = 0;
  post.min_component_size = 0;

  const ThresholdSelection sel =
      select_threshold(std::span(&map, 1), std::span(&gt, 1),
                       std::span(&brain, 1), ThresholdSearch{}, post);
  // Nothing is strictly above the only candidate, so the prediction is
  // empty and pooled Dice is 0 with the candidate value itself chosen.
  REQUIRE(sel.threshold == Catch::Approx(0.25));
  REQUIRE(sel.dice == 0.0);
}

TEST_CASE("select_threshold rejects degenerate inputs", "[pipeline]") {
  const AnomalyMap map = testutil::random_volume(6, 6, 6, 1);
  Mask3D gt(6, 6, 6);
  gt(2, 2, 2) = 1;
  const Mask3D brain(6, 6, 6, 1);
  PostprocessConfig post;

  SECTION("empty validation set") {
    REQUIRE_THROWS_AS(
        select_threshold({}, {}, {}, ThresholdSearch{}, post),
        validation_error);
  }
  SECTION("length mismatch") {
    std::vector<AnomalyMap> maps = {map, map};
    std::vector<Mask3D> gts = {gt};
    std::vector<Mask3D> brains = {brain, brain};
    REQUIRE_THROWS_AS(
        select_threshold(maps, gts, brains, ThresholdSearch{}, post),
        validation_error);
  }
  SECTION("no ground-truth voxels") {
    const Mask3D empty_gt(6, 6, 6);
    REQUIRE_THROWS_AS(
        select_threshold(std::span(&map, 1), std::span(&empty_gt, 1),
                         std::span(&brain, 1), ThresholdSearch{}, post),
        validation_error);
  }
  SECTION("erosion leaves no in-mask scores") {
    post.erosion_iterations = 3; // 6^3 fully erodes away
    REQUIRE_THROWS_AS(
        select_threshold(std::span(&map, 1), std::span(&gt, 1),
                         std::span(&brain, 1), ThresholdSearch{}, post),
        validation_error);
  }
  SECTION("dimension mismatch") {
    const Mask3D small(6, 6, 5);
    REQUIRE_THROWS_AS(
        select_threshold(std::span(&map, 1), std::span(&small, 1),
                         std::span(&brain, 1), ThresholdSearch{}, post),
        validation_error);
  }
}
