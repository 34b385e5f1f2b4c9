#include <cmath>
#include <random>

#include "doctest.h"

#include "anchoropt/anchors.hpp"
#include "anchoropt/errors.hpp"
#include "oracles.hpp"

using namespace anchoropt;

TEST_CASE("IoU of two offset corner boxes is 1/7") {
  // [0,2]x[0,2] and [1,3]x[1,3]: intersection 1, union 7.
  const Box a = Box::from_corner(0, 0, 2, 2);
  const Box b = Box::from_corner(1, 1, 2, 2);
  CHECK(a.cx == 1.0);
  CHECK(iou(a, b) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, Box::from_corner(5, 5, 1, 1)) == 0.0);
  CHECK(iou(a, Box::from_corner(2, 0, 2, 2)) == 0.0);
}

TEST_CASE("centered IoU agrees with the pairwise oracle") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (int i = 0; i < 200; ++i) {
    const Shape a{u(rng), u(rng)}, b{u(rng), u(rng)};
    CHECK(centered_iou(a, b) == doctest::Approx(oracle::pair_iou(a, b)).epsilon(1e-13));
    CHECK(centered_iou(a, b) == doctest::Approx(iou({0, 0, a.w, a.h}, {0, 0, b.w, b.h})).epsilon(1e-13));
  }
  CHECK(centered_iou({0.2, 0.2}, {0.1, 0.1}) == doctest::Approx(0.25));
}

TEST_CASE("linear scale schedule") {
  const auto s = ssd_scale_schedule(0.2, 0.9, 6);
  const double expected[] = {0.2, 0.34, 0.48, 0.62, 0.76, 0.9};
  REQUIRE(s.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(std::abs(s[i] - expected[i]) < 1e-12);
  CHECK(s.back() == 0.9);
  CHECK_THROWS_AS(ssd_scale_schedule(0.2, 0.9, 1), ContractError);
  CHECK_THROWS_AS(ssd_scale_schedule(0.0, 0.9, 6), ContractError);
  CHECK_THROWS_AS(ssd_scale_schedule(0.9, 0.2, 6), ContractError);
}

TEST_CASE("aspect ratio keeps the area") {
  const auto a = anchor_wh(128, 2.0);
  CHECK(a.w == doctest::Approx(181.019336).epsilon(1e-9));
  CHECK(a.h == doctest::Approx(90.509668).epsilon(1e-9));
  for (double r : {0.25, 0.5, 1.0, 3.0, 1.0 / 3.0}) {
    const auto s = anchor_wh(0.37, r);
    CHECK(s.w * s.h == doctest::Approx(0.37 * 0.37).epsilon(1e-14));
    CHECK(s.w / s.h == doctest::Approx(r).epsilon(1e-14));
  }
  CHECK(constant_box_scale(0.2, 0.37) == doctest::Approx(0.2720294102).epsilon(1e-9));
}

TEST_CASE("SSD default layout") {
  const auto c = ssd_default_config();
  const std::vector<double> scales{0.1, 0.2, 0.37, 0.54, 0.71, 0.88, 1.05};
  CHECK(c.scales == scales);
  REQUIRE(c.num_layers() == 6);
  const std::size_t per_layer[] = {4, 6, 6, 6, 4, 4};
  for (std::size_t l = 0; l < 6; ++l) CHECK(ssd_layer_boxes(c, l).size() == per_layer[l]);
  CHECK(ssd_all_boxes(c).size() == 30);

  const auto layer1 = ssd_layer_boxes(c, 1);
  CHECK(layer1[0].w == 0.2);
  CHECK(layer1[4].w == doctest::Approx(0.2 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(layer1[5].w == doctest::Approx(std::sqrt(0.2 * 0.37)).epsilon(1e-14));
  CHECK(layer1[5].w == layer1[5].h);
  // Last layer's constant box uses the seventh scale.
  CHECK(ssd_layer_boxes(c, 5).back().w == doctest::Approx(std::sqrt(0.88 * 1.05)).epsilon(1e-14));
  CHECK_THROWS_AS(ssd_layer_boxes(c, 6), ContractError);
}

TEST_CASE("SSD config validation") {
  CHECK_THROWS_AS(ssd_config_with_scales({0.1, 0.2, 0.37, 0.54, 0.71, 0.88, 1.07}), ConfigError);
  CHECK_THROWS_AS(ssd_config_with_scales({0.0, 0.2, 0.37, 0.54, 0.71, 0.88, 1.0}), ConfigError);
  CHECK_THROWS_AS(ssd_config_with_scales({0.1, 0.2}), ConfigError);
  CHECK_NOTHROW(ssd_config_with_scales({0.1, 0.2, 0.37, 0.54, 0.71, 0.88, 1.06}));
  auto c = ssd_default_config();
  c.ratios_per_layer[2] = {2.0, 0.5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ssd_default_config();
  c.include_constant_box.pop_back();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  // Six scales: the last layer has nothing to pair its constant box with.
  c = ssd_default_config();
  c.scales.pop_back();
  CHECK_NOTHROW(c.validate());
  CHECK_THROWS_AS(ssd_layer_boxes(c, 5), ContractError);
  c.include_constant_box[5] = false;
  CHECK(ssd_layer_boxes(c, 5).size() == 3);
}

TEST_CASE("Faster R-CNN anchor set and grid") {
  FrcnnAnchorConfig c;
  const auto set = frcnn_anchor_set(c);
  REQUIRE(set.size() == 9);
  CHECK(set[0].w == doctest::Approx(128 * std::sqrt(0.5)));
  CHECK(set[1].w == 128);
  CHECK(set[2].w == doctest::Approx(181.019336).epsilon(1e-9));
  CHECK(set[8].h == doctest::Approx(512 / std::sqrt(2.0)));

  c.feature_width = 3;
  c.feature_height = 2;
  const auto grid = frcnn_grid(c);
  REQUIRE(grid.size() == 3 * 2 * 9);
  CHECK(grid[0].cx == 8.0);
  CHECK(grid[0].cy == 8.0);
  CHECK(grid[9].cx == 24.0);
  CHECK(grid[27].cx == 8.0);
  CHECK(grid[27].cy == 24.0);
  CHECK(grid.back().cx == 40.0);

  c.feature_width = -1;
  CHECK_THROWS_AS(frcnn_grid(c), ContractError);
  FrcnnAnchorConfig bad;
  bad.ratios = {0.0};
  CHECK_THROWS_AS(frcnn_anchor_set(bad), ContractError);
}

TEST_CASE("Faster R-CNN config from physical parameters") {
  const auto space = HyperParamSpace::builtin("faster_rcnn");
  const auto c = FrcnnAnchorConfig::from_physical(space.transform(space.initial_vector()));
  CHECK(c.input_size == 600);
  CHECK(c.ratios == std::vector<double>{0.5, 1, 2});
  CHECK(c.scales == std::vector<double>{128, 256, 512});
  CHECK(c.base_size == 16);
}
