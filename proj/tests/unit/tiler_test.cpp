// Copyright 2026 The planksynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "planksynth/evaluator.hpp"
#include "planksynth/pcigen.hpp"
#include "planksynth/tiler.hpp"

namespace planksynth {
namespace {

using testing::rect_mask;

std::set<int> xs_of(const TilePlan& p) {
  std::set<int> s;
  for (const auto& t : p.tiles) s.insert(t.x);
  return s;
}
std::set<int> ys_of(const TilePlan& p) {
  std::set<int> s;
  for (const auto& t : p.tiles) s.insert(t.y);
  return s;
}

TEST(PlanTiles, SpecSizes) {
  EXPECT_EQ(plan_tiles(1000, 1000).tiles, (std::vector<TileOrigin>{{0, 0}}));
  const auto big = plan_tiles(10000, 8000, 1000, 200);
  EXPECT_EQ(xs_of(big).size(), 13u);
  EXPECT_EQ(ys_of(big).size(), 10u);
  EXPECT_EQ(big.tiles.size(), 130u);
  EXPECT_EQ(*xs_of(big).rbegin(), 9000);
  EXPECT_EQ(*ys_of(big).rbegin(), 7000);
  const auto narrow = plan_tiles(1100, 1000, 1000, 200);
  EXPECT_EQ(xs_of(narrow), (std::set<int>{0, 100}));
  EXPECT_EQ(narrow.tiles.size(), 2u);
  EXPECT_THROW(plan_tiles(100, 100, 200, 200), ConfigError);
  EXPECT_THROW(plan_tiles(100, 100, 200, -1), ConfigError);
}

// Oracle for one axis: regular origins k*stride that fit, then the clamped
// last origin if the regular ones stop short.
std::vector<int> axis_oracle(int len, int tile, int stride) {
  if (len <= tile) return {0};
  std::vector<int> v;
  for (int k = 0; k * stride + tile <= len; ++k) v.push_back(k * stride);
  if (v.back() != len - tile) v.push_back(len - tile);
  return v;
}

TEST(PlanTiles, CoverageExhaustive) {
  for (int w = 1; w <= 3000; w += 7) {
    for (int h = 1; h <= 3000; h += 7) {
      const auto p = plan_tiles(w, h, 1000, 200);
      const auto xs = xs_of(p), ys = ys_of(p);
      ASSERT_EQ(p.tiles.size(), xs.size() * ys.size());
      ASSERT_TRUE(std::is_sorted(p.tiles.begin(), p.tiles.end()));
      ASSERT_TRUE(std::adjacent_find(p.tiles.begin(), p.tiles.end()) == p.tiles.end());
      ASSERT_EQ(std::vector<int>(xs.begin(), xs.end()), axis_oracle(w, 1000, 800));
      ASSERT_EQ(std::vector<int>(ys.begin(), ys.end()), axis_oracle(h, 1000, 800));
      // Each axis is covered without gaps and tiles stay inside.
      int reach = 0;
      for (int x : xs) {
        ASSERT_LE(x, reach);
        ASSERT_LE(x + p.tile_width(), w);
        reach = std::max(reach, x + p.tile_width());
      }
      ASSERT_EQ(reach, w);
      reach = 0;
      for (int y : ys) {
        ASSERT_LE(y, reach);
        ASSERT_LE(y + p.tile_height(), h);
        reach = std::max(reach, y + p.tile_height());
      }
      ASSERT_EQ(reach, h);
    }
  }
}

TEST(Crop, PointwiseAndStitch) {
  Raster img(2300, 1500, 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>((x * 7 + y * 13 + c * 101) % 256);
    }
  }
  const auto plan = plan_tiles(img.width, img.height, 1000, 200);
  const auto tiles = crop(img, plan);
  Raster stitched(img.width, img.height, 3, 0);
  for (const auto& t : tiles) {
    ASSERT_EQ(t.image.width, 1000);
    ASSERT_EQ(t.image.height, 1000);
    for (int v = 0; v < 1000; v += 37) {
      for (int u = 0; u < 1000; u += 41) ASSERT_EQ(t.image.at(u, v, 1), img.at(t.origin.x + u, t.origin.y + v, 1));
    }
    composite_into(stitched, t.image, [] {
      Bitmap b(1000, 1000);
      std::fill(b.bits.begin(), b.bits.end(), 1);
      return b;
    }(), Offset{t.origin.x, t.origin.y});
  }
  EXPECT_EQ(stitched, img);
  const auto single = crop(img, plan_tiles(img.width, img.height, 5000, 200));
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].image, img);
  EXPECT_THROW(crop(Raster(10, 10, 1), plan), ShapeMismatch);
}

TEST(Lift, TranslatesMasks) {
  DetectionSet tile_dets{{Detection{1, 1, 5, rect_mask(1000, 1000, {0, 0, 1, 1}).rle(), 0.5, 2, {}},
                          Detection{2, 1, 5, rect_mask(1000, 1000, {10, 20, 30, 40}).rle(), 0.7, 2, {}}}};
  const auto same = lift_detections(tile_dets, {0, 0}, 1000, 1000);
  EXPECT_EQ(same.detections[1].segmentation, tile_dets.detections[1].segmentation);
  const auto lifted = lift_detections(tile_dets, {800, 0}, 1800, 1000);
  const auto m = InstanceMask::from_rle(lifted.detections[0].segmentation);
  EXPECT_EQ(m.bbox(), (BBox{800, 0, 1, 1}));
  EXPECT_EQ(InstanceMask::from_rle(lifted.detections[1].segmentation).area(), 1200u);
  EXPECT_EQ(lifted.detections[1].score, 0.7);
  EXPECT_EQ(lifted.detections[1].category_id, 5);
  EXPECT_EQ(lifted.detections[0].window, (BBox{800, 0, 1000, 1000}));
  EXPECT_FALSE(lifted.detections[0].tile.has_value());
}

DetectionSet strip_dets(const std::vector<std::pair<BBox, double>>& rows) {
  DetectionSet s;
  std::int64_t id = 1;
  for (const auto& [r, score] : rows) s.detections.push_back({id++, 1, 1, rect_mask(10, 1, r).rle(), score, {}, {}});
  return s;
}

TEST(Merge, IdenticalAndDisjoint) {
  const auto merged = merge_detections(strip_dets({{{0, 0, 4, 1}, 0.8}, {{0, 0, 4, 1}, 0.9}}));
  ASSERT_EQ(merged.detections.size(), 1u);
  EXPECT_EQ(merged.detections[0].score, 0.9);
  EXPECT_EQ(merge_detections(strip_dets({{{0, 0, 4, 1}, 0.8}, {{5, 0, 4, 1}, 0.9}})).detections.size(), 2u);
}

TEST(Merge, ChainThroughSeed) {
  // A = [0,10), B = [0,6), C = [4,10): IoU(A,B) = IoU(A,C) = 0.6, IoU(B,C) = 0.2.
  const auto in = strip_dets({{{4, 0, 6, 1}, 0.5}, {{0, 0, 10, 1}, 0.9}, {{0, 0, 6, 1}, 0.7}});
  const auto a = InstanceMask::from_rle(in.detections[1].segmentation);
  const auto b = InstanceMask::from_rle(in.detections[2].segmentation);
  const auto c = InstanceMask::from_rle(in.detections[0].segmentation);
  ASSERT_DOUBLE_EQ(iou(a, b), 0.6);
  ASSERT_DOUBLE_EQ(iou(a, c), 0.6);
  ASSERT_DOUBLE_EQ(iou(b, c), 0.2);
  const auto out = merge_detections(in);
  ASSERT_EQ(out.detections.size(), 1u);
  EXPECT_EQ(out.detections[0].score, 0.9);
  EXPECT_EQ(out.detections[0].id, 2);
  EXPECT_EQ(InstanceMask::from_rle(out.detections[0].segmentation), a);
}

TEST(Merge, IdempotentAndCovering) {
  std::mt19937 gen(12);
  std::uniform_int_distribution<int> pos(0, 50), side(1, 25), tenth(1, 10);
  for (int i = 0; i < 200; ++i) {
    DetectionSet in;
    const int n = std::uniform_int_distribution<int>(0, 12)(gen);
    for (int k = 0; k < n; ++k) {
      const BBox r{pos(gen), pos(gen), side(gen), side(gen)};
      in.detections.push_back({k + 1, 1, 1 + k % 2, rect_mask(80, 80, r).rle(), tenth(gen) / 10.0, {}, {}});
    }
    const auto once = merge_detections(in);
    EXPECT_EQ(merge_detections(once), once);
    EXPECT_LE(once.detections.size(), in.detections.size());
    for (std::size_t k = 1; k < once.detections.size(); ++k) {
      EXPECT_GE(once.detections[k - 1].score, once.detections[k].score);
    }
    Bitmap all(80, 80);
    for (const auto& d : in.detections) {
      const auto b = rle_decode(d.segmentation);
      for (std::size_t p = 0; p < b.bits.size(); ++p) all.bits[p] |= b.bits[p];
    }
    const auto all_mask = rle_encode(all);
    for (const auto& d : once.detections) EXPECT_TRUE(is_subset(InstanceMask::from_rle(d.segmentation), all_mask));
  }
}

// Fake per-tile detections: each ground-truth mask clipped to each tile.
DetectionSet tile_ground_truth(const std::vector<PciLabel>& labels, const TilePlan& plan, std::int64_t image_id) {
  DetectionSet lifted;
  for (std::size_t t = 0; t < plan.tiles.size(); ++t) {
    const BBox rect = plan.rect(t);
    DetectionSet per_tile;
    for (const auto& l : labels) {
      const Bitmap local = decode_window(l.mask, rect);
      if (local.count() == 0) continue;
      per_tile.detections.push_back({{}, image_id, 1, rle_encode(local).rle(), 1.0, static_cast<int>(t), {}});
    }
    for (auto& d : lift_detections(per_tile, plan.tiles[t], plan.image_width, plan.image_height).detections) {
      lifted.detections.push_back(std::move(d));
    }
  }
  return lifted;
}

TEST(Merge, SeamFidelityOnSyntheticImage) {
  demo::PoolSpec spec;
  spec.families = 4;
  spec.per_family = 3;
  spec.backgrounds = 1;
  spec.background_width = 100;
  spec.background_height = 100;
  spec.max_individual_extent = 60;
  const auto pools = demo::make_pools(spec);
  PciConfig cfg;
  cfg.canvas_width = 500;
  cfg.canvas_height = 400;
  cfg.count_range = {20, 30};
  cfg.seed = 4;
  AnnotationSet gt;
  gt.categories = {{1, "any", Rank::Family, {}}};
  DetectionSet merged;
  for (std::int64_t i = 1; i <= 3; ++i) {
    const Pci pci = synthesize(sample_recipe(cfg, pools, static_cast<std::uint64_t>(i)), cfg, pools);
    gt.images.push_back({i, "p.png", cfg.canvas_width, cfg.canvas_height, {}});
    for (const auto& l : pci.labels) {
      gt.annotations.push_back(make_annotation(static_cast<std::int64_t>(gt.annotations.size()) + 1, i, 1, l.mask));
    }
    const auto plan = plan_tiles(cfg.canvas_width, cfg.canvas_height, 150, 30);
    for (auto& d : merge_detections(tile_ground_truth(pci.labels, plan, i)).detections) {
      merged.detections.push_back(std::move(d));
    }
  }
  EvalConfig ec;
  ec.class_agnostic = true;
  const auto r = evaluate(merged, gt, ec);
  EXPECT_GE(*r.map, 0.99);
}

TEST(TilePlanJson, RoundTrip) {
  const auto p = plan_tiles(2500, 1200, 1000, 200);
  EXPECT_EQ(tile_plan_from_json(ojson::parse(to_json(p).dump())), p);
  auto j = to_json(p);
  j["tiles"][0]["x"] = 5000;
  EXPECT_THROW(tile_plan_from_json(j), SchemaError);
}

}  // namespace
}  // namespace planksynth
