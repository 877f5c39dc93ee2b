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

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "planksynth/evaluator.hpp"
#include "planksynth/evaluator_oracle.hpp"

namespace planksynth {
namespace {

using testing::rect_mask;

AnnotationSet scene_with(int w, int h, const std::vector<std::pair<std::int64_t, BBox>>& gts, int n_images = 1) {
  AnnotationSet set;
  set.categories = {{1, "a", Rank::Family, {}}, {2, "b", Rank::Family, {}}, {3, "c", Rank::Family, {}}};
  for (int i = 1; i <= n_images; ++i) set.images.push_back({i, "x.png", w, h, {}});
  std::int64_t id = 1;
  for (const auto& [cat, r] : gts) set.annotations.push_back(make_annotation(id++, 1, cat, rect_mask(w, h, r)));
  return set;
}

Detection det(std::int64_t id, std::int64_t image, std::int64_t cat, const InstanceMask& m, double score) {
  return Detection{id, image, cat, m.rle(), score, {}, {}};
}

void expect_same(const std::optional<double>& a, const std::optional<double>& b, const char* what) {
  ASSERT_EQ(a.has_value(), b.has_value()) << what;
  if (a) {
    EXPECT_NEAR(*a, *b, 1e-9) << what;
  }
}

void expect_equal_results(const EvalResult& a, const EvalResult& b) {
  expect_same(a.map, b.map, "map");
  expect_same(a.ap50, b.ap50, "ap50");
  expect_same(a.ap_s, b.ap_s, "ap_s");
  expect_same(a.ap_m, b.ap_m, "ap_m");
  expect_same(a.ap_l, b.ap_l, "ap_l");
  ASSERT_EQ(a.per_threshold.size(), b.per_threshold.size());
  for (std::size_t i = 0; i < a.per_threshold.size(); ++i) expect_same(a.per_threshold[i].ap, b.per_threshold[i].ap, "tau");
}

TEST(Iou, Basics) {
  const auto a = rect_mask(4, 4, {0, 0, 2, 2});
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, rect_mask(4, 4, {2, 2, 2, 2})), 0.0);
  // 2x2 blocks sharing one 1x2 column: 2 / 6.
  const auto b = rect_mask(4, 4, {1, 0, 2, 2});
  EXPECT_DOUBLE_EQ(iou(a, b), 2.0 / 6.0);
  EXPECT_EQ(iou(rle_encode(Bitmap(3, 3)), rle_encode(Bitmap(3, 3))), 0.0);
}

TEST(Iou, SymmetricAndBounded) {
  std::mt19937 gen(3);
  std::bernoulli_distribution bit(0.3);
  for (int i = 0; i < 300; ++i) {
    Bitmap x(13, 11), y(13, 11);
    for (auto& v : x.bits) v = bit(gen);
    for (auto& v : y.bits) v = bit(gen);
    const auto p = rle_encode(x), g = rle_encode(y);
    const double v = iou(p, g);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(v, iou(g, p));
  }
}

TEST(Match, GreedyOrderAndThresholdEdge) {
  const EvalConfig cfg;
  std::vector<EvalGroundTruth> gts = {{1, 1, 1, 100, rect_mask(20, 20, {0, 0, 10, 10})}};
  // IoU 0.9 with score 0.5; IoU 0.8 with score 0.9: the higher score wins.
  std::vector<EvalDetection> dets = {{1, 1, 1, 0.5, rect_mask(20, 20, {0, 0, 10, 9})},
                                     {2, 1, 1, 0.9, rect_mask(20, 20, {0, 0, 10, 8})}};
  const auto m = match_instances(dets, gts, 0.5, cfg.all(), false);
  ASSERT_EQ(m.outcomes.size(), 2u);
  EXPECT_EQ(m.outcomes[0].det_id, 2);
  EXPECT_TRUE(m.outcomes[0].matched);
  EXPECT_FALSE(m.outcomes[1].matched);
  EXPECT_FALSE(m.outcomes[1].ignored);

  // 49 / 100 at tau 0.50 is a false positive; 50 / 100 is a match.
  std::vector<EvalGroundTruth> g2 = {{1, 1, 1, 100, rect_mask(100, 1, {0, 0, 100, 1})}};
  EXPECT_FALSE(match_instances({{1, 1, 1, 1.0, rect_mask(100, 1, {0, 0, 49, 1})}}, g2, 0.5, cfg.all(), false)
                   .outcomes[0]
                   .matched);
  EXPECT_TRUE(match_instances({{1, 1, 1, 1.0, rect_mask(100, 1, {0, 0, 50, 1})}}, g2, 0.5, cfg.all(), false)
                  .outcomes[0]
                  .matched);
}

TEST(AveragePrecision, Staircases) {
  Matching perfect{{{1, 1, 1.0, true, false, 1, 1.0}}, 1};
  EXPECT_EQ(average_precision(std::span<const Matching>(&perfect, 1)), 1.0);
  Matching none{{}, 3};
  EXPECT_EQ(average_precision(std::span<const Matching>(&none, 1)), 0.0);
  Matching tp_then_fp{{{1, 1, 0.9, true, false, 1, 1.0}, {2, 1, 0.8, false, false, {}, 0.0}}, 1};
  EXPECT_EQ(average_precision(std::span<const Matching>(&tp_then_fp, 1)), 1.0);
  // FP first: precision 1/2 at recall 1 for all 101 points.
  Matching fp_then_tp{{{1, 1, 0.9, false, false, {}, 0.0}, {2, 1, 0.8, true, false, 1, 1.0}}, 1};
  EXPECT_DOUBLE_EQ(*average_precision(std::span<const Matching>(&fp_then_tp, 1)), 0.5);
  Matching empty{{}, 0};
  EXPECT_FALSE(average_precision(std::span<const Matching>(&empty, 1)).has_value());
}

TEST(Evaluate, PerfectPredictions) {
  const AnnotationSet gt = testing::three_image_fixture();
  for (bool agnostic : {false, true}) {
    EvalConfig cfg;
    cfg.class_agnostic = agnostic;
    const auto r = evaluate(detections_from_annotations(gt), gt, cfg);
    EXPECT_EQ(r.map, 1.0);
    EXPECT_EQ(r.ap50, 1.0);
    expect_equal_results(r, oracle::oracle_evaluate(detections_from_annotations(gt), gt, cfg));
  }
}

TEST(Evaluate, IouSixTenthsGivesThreeTenths) {
  // gt 10x10, det 6x10 inside it: IoU 60 / 100.
  const AnnotationSet gt = scene_with(20, 20, {{1, {0, 0, 10, 10}}});
  DetectionSet dt{{det(1, 1, 1, rect_mask(20, 20, {0, 0, 6, 10}), 0.7)}};
  const auto r = evaluate(dt, gt);
  ASSERT_EQ(r.per_threshold.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(*r.per_threshold[i].ap, i < 3 ? 1.0 : 0.0) << i;
  EXPECT_NEAR(*r.map, 0.3, 1e-12);
  EXPECT_NEAR(*oracle::oracle_evaluate(dt, gt).map, 0.3, 1e-12);
}

TEST(Evaluate, SizeBuckets) {
  const EvalConfig cfg;
  EXPECT_TRUE(cfg.small().contains(900));
  EXPECT_TRUE(cfg.medium().contains(2500));
  EXPECT_TRUE(cfg.large().contains(10000));
  EXPECT_TRUE(cfg.medium().contains(1024));
  EXPECT_TRUE(cfg.medium().contains(9216));
  EXPECT_FALSE(cfg.small().contains(1024));
  EXPECT_FALSE(cfg.large().contains(9216));

  // One instance per bucket; only the small one is detected.
  const AnnotationSet gt = scene_with(200, 200, {{1, {0, 0, 30, 30}}, {1, {40, 0, 50, 50}}, {1, {0, 100, 100, 100}}});
  DetectionSet dt{{det(1, 1, 1, rect_mask(200, 200, {0, 0, 30, 30}), 1.0)}};
  const auto r = evaluate(dt, gt);
  EXPECT_EQ(r.ap_s, 1.0);
  EXPECT_EQ(r.ap_m, 0.0);
  EXPECT_EQ(r.ap_l, 0.0);
  // No small ground truth at all: APs absent.
  const AnnotationSet big = scene_with(200, 200, {{1, {0, 100, 100, 100}}});
  EXPECT_FALSE(evaluate(DetectionSet{}, big).ap_s.has_value());
}

TEST(Evaluate, UnknownImagesAreListed) {
  const AnnotationSet gt = scene_with(10, 10, {{1, {0, 0, 2, 2}}});
  DetectionSet dt{{det(1, 7, 1, rect_mask(10, 10, {0, 0, 2, 2}), 1.0), det(2, 9, 1, rect_mask(10, 10, {0, 0, 2, 2}), 1.0)}};
  try {
    evaluate(dt, gt);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("7, 9"), std::string::npos) << e.what();
  }
}

// Random small scenes: up to 5 images, up to 8 instances each.
struct Scene {
  AnnotationSet gt;
  DetectionSet dt;
};

Scene random_scene(std::mt19937& gen, int n_categories) {
  Scene s;
  std::uniform_int_distribution<int> n_img(1, 5), n_inst(0, 8), cat(1, n_categories), side(2, 120), pos(0, 40),
      jitter(-6, 6), tenth(0, 10);
  std::bernoulli_distribution coin(0.5);
  for (int c = 1; c <= n_categories; ++c) s.gt.categories.push_back({c, "c" + std::to_string(c), Rank::Family, {}});
  const int W = 160, H = 160;
  const int images = n_img(gen);
  std::int64_t gid = 1, did = 1;
  auto clamp_rect = [&](BBox r) {
    r.x = std::clamp(r.x, 0, W - 1);
    r.y = std::clamp(r.y, 0, H - 1);
    r.w = std::clamp(r.w, 1, W - r.x);
    r.h = std::clamp(r.h, 1, H - r.y);
    return r;
  };
  for (int i = 1; i <= images; ++i) {
    s.gt.images.push_back({i, "s.png", W, H, {}});
    const int n = n_inst(gen);
    for (int k = 0; k < n; ++k) {
      const BBox r = clamp_rect({pos(gen), pos(gen), side(gen), side(gen)});
      const std::int64_t c = cat(gen);
      s.gt.annotations.push_back(make_annotation(gid++, i, c, rect_mask(W, H, r)));
      const int copies = std::uniform_int_distribution<int>(0, 2)(gen);
      for (int d = 0; d < copies; ++d) {
        const BBox q = clamp_rect({r.x + jitter(gen), r.y + jitter(gen), r.w + jitter(gen), r.h + jitter(gen)});
        s.dt.detections.push_back(det(did++, i, coin(gen) ? c : cat(gen), rect_mask(W, H, q), tenth(gen) / 10.0));
      }
    }
    const int spurious = std::uniform_int_distribution<int>(0, 2)(gen);
    for (int d = 0; d < spurious; ++d) {
      const BBox q = clamp_rect({pos(gen) * 3, pos(gen) * 3, side(gen) / 2, side(gen) / 2});
      s.dt.detections.push_back(det(did++, i, cat(gen), rect_mask(W, H, q), tenth(gen) / 10.0));
    }
  }
  std::shuffle(s.dt.detections.begin(), s.dt.detections.end(), gen);
  return s;
}

TEST(Evaluate, AgreesWithOracleOnRandomScenes) {
  std::mt19937 gen(2024);
  for (int i = 0; i < 500; ++i) {
    const Scene s = random_scene(gen, 3);
    EvalConfig cfg;
    cfg.class_agnostic = i % 3 == 0;
    cfg.max_detections_per_image = i % 7 == 0 ? 3 : 100;
    SCOPED_TRACE("scene " + std::to_string(i));
    expect_equal_results(evaluate(s.dt, s.gt, cfg), oracle::oracle_evaluate(s.dt, s.gt, cfg));
  }
}

TEST(Evaluate, PermutationAndScoreTransformInvariance) {
  std::mt19937 gen(77);
  for (int i = 0; i < 60; ++i) {
    const Scene s = random_scene(gen, 2);
    const auto base = evaluate(s.dt, s.gt);
    DetectionSet shuffled = s.dt;
    std::shuffle(shuffled.detections.begin(), shuffled.detections.end(), gen);
    expect_equal_results(evaluate(shuffled, s.gt), base);
    DetectionSet squashed = s.dt;
    for (auto& d : squashed.detections) d.score = 0.05 + 0.9 * d.score * d.score;
    expect_equal_results(evaluate(squashed, s.gt), base);
  }
}

TEST(Evaluate, DuplicateTruePositiveNeverHelps) {
  std::mt19937 gen(5);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    Scene s = random_scene(gen, 2);
    if (s.gt.annotations.empty()) continue;
    const auto& a = s.gt.annotations[0];
    const auto am = InstanceMask::from_rle(a.segmentation);
    // Skip scenes where the duplicate could legitimately match another gt.
    bool crowded = false;
    for (std::size_t k = 1; k < s.gt.annotations.size(); ++k) {
      const auto& b = s.gt.annotations[k];
      if (b.image_id == a.image_id && b.category_id == a.category_id &&
          iou(am, InstanceMask::from_rle(b.segmentation)) >= 0.5) {
        crowded = true;
      }
    }
    if (crowded) continue;
    // Ranked first in its image, so it takes `a` at every threshold.
    s.dt.detections.push_back(Detection{-2, a.image_id, a.category_id, a.segmentation, 1.0, {}, {}});
    const auto with_tp = evaluate(s.dt, s.gt);
    s.dt.detections.push_back(Detection{-1, a.image_id, a.category_id, a.segmentation, 1.0, {}, {}});
    const auto with_dup = evaluate(s.dt, s.gt);
    EXPECT_LE(*with_dup.map, *with_tp.map + 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(Evaluate, AgnosticEqualsAwareForOneCategory) {
  std::mt19937 gen(6);
  for (int i = 0; i < 60; ++i) {
    const Scene s = random_scene(gen, 1);
    EvalConfig agnostic;
    agnostic.class_agnostic = true;
    expect_equal_results(evaluate(s.dt, s.gt, agnostic), evaluate(s.dt, s.gt));
  }
}

TEST(Oracle, RefusesLargeScenes) {
  std::vector<std::pair<std::int64_t, BBox>> many;
  for (int i = 0; i < 33; ++i) many.push_back({1, {i, 0, 1, 1}});
  const AnnotationSet gt = scene_with(40, 2, many);
  EXPECT_THROW(oracle::oracle_evaluate(DetectionSet{}, gt), ConfigError);
}

TEST(Evaluate, CustomThresholdsWithoutHalfStillReportAp50) {
  const AnnotationSet gt = scene_with(20, 20, {{1, {0, 0, 10, 10}}});
  DetectionSet dt{{det(1, 1, 1, rect_mask(20, 20, {0, 0, 6, 10}), 0.7)}};
  EvalConfig cfg;
  cfg.iou_thresholds = {0.7, 0.8};
  const auto r = evaluate(dt, gt, cfg);
  EXPECT_EQ(r.map, 0.0);
  EXPECT_EQ(r.ap50, 1.0);
}

}  // namespace
}  // namespace planksynth
