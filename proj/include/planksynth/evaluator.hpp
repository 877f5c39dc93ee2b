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

// COCO-style instance segmentation scoring: mask IoU, greedy matching with
// size-bucket ignore rules, 101-point interpolated AP, and the
// threshold-averaged mAP / AP50 / APs / APm / APl summary.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "planksynth/dataset_io.hpp"
#include "planksynth/errors.hpp"
#include "planksynth/mask.hpp"

namespace planksynth {

/// Pixel-area interval with independently open or closed ends.
struct AreaBucket {
  std::string name;
  double lo = 0.0;
  bool lo_closed = true;
  double hi = std::numeric_limits<double>::infinity();
  bool hi_closed = true;

  bool contains(double area) const {
    const bool above = lo_closed ? area >= lo : area > lo;
    const bool below = hi_closed ? area <= hi : area < hi;
    return above && below;
  }
};

/// Thresholds 0.50, 0.55, ..., 0.95, each computed as an exact decimal
/// quotient so that e.g. an IoU of 3/5 compares equal to 0.60.
inline std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back((50 + 5 * k) / 100.0);
  return t;
}

struct EvalConfig {
  std::vector<double> iou_thresholds = default_iou_thresholds();
  double small_limit = 32.0 * 32.0;  ///< small: area < small_limit
  double large_limit = 96.0 * 96.0;  ///< large: area > large_limit; medium is closed on both ends
  bool class_agnostic = false;
  int max_detections_per_image = 100;
  bool collect_pairs = true;

  void validate() const {
    if (iou_thresholds.empty()) throw ConfigError("iou_thresholds must not be empty");
    for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
      const double t = iou_thresholds[i];
      if (!(t > 0 && t <= 1)) throw ConfigError("iou thresholds must lie in (0, 1]");
      if (i > 0 && !(t > iou_thresholds[i - 1])) throw ConfigError("iou thresholds must be strictly increasing");
    }
    if (!(small_limit > 0 && small_limit <= large_limit)) {
      throw ConfigError("size buckets must satisfy 0 < small limit <= large limit");
    }
    if (max_detections_per_image < 1) throw ConfigError("max_detections_per_image must be >= 1");
  }

  AreaBucket all() const { return {"all", 0.0, true, std::numeric_limits<double>::infinity(), true}; }
  AreaBucket small() const { return {"small", 0.0, true, small_limit, false}; }
  AreaBucket medium() const { return {"medium", small_limit, true, large_limit, true}; }
  AreaBucket large() const { return {"large", large_limit, false, std::numeric_limits<double>::infinity(), true}; }
};

/// |p n g| / |p u g| computed on the run-length form. Two empty masks give 0.
inline double iou(const InstanceMask& p, const InstanceMask& g) {
  const std::uint64_t inter = intersection_area(p, g);
  const std::uint64_t uni = p.area() + g.area() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct EvalDetection {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  double score = 0.0;
  InstanceMask mask;
};

struct EvalGroundTruth {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  double area = 0.0;
  InstanceMask mask;
};

struct DetOutcome {
  std::int64_t det_id = 0;
  std::int64_t image_id = 0;
  double score = 0.0;
  bool matched = false;
  bool ignored = false;  ///< contributes neither TP nor FP
  std::optional<std::int64_t> gt_id;
  double iou = 0.0;
};

/// Result of matching one image (or one image/category group) at one
/// threshold and size bucket.
struct Matching {
  std::vector<DetOutcome> outcomes;
  std::size_t positive_gts = 0;  ///< ground truths inside the bucket
};

inline bool detection_order(const EvalDetection& a, const EvalDetection& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

/// Greedy matching in score order. `ious[d][g]` must be given for the
/// detections already in detection_order and the ground truths as passed.
inline Matching match_with_ious(std::span<const EvalDetection> dets, std::span<const EvalGroundTruth> gts,
                                const std::vector<std::vector<double>>& ious, double tau,
                                const AreaBucket& bucket, bool class_agnostic) {
  Matching m;
  std::vector<std::size_t> order(gts.size());
  std::vector<bool> gt_ignored(gts.size());
  for (std::size_t g = 0; g < gts.size(); ++g) {
    order[g] = g;
    gt_ignored[g] = !bucket.contains(gts[g].area);
    if (!gt_ignored[g]) ++m.positive_gts;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return !gt_ignored[a] && gt_ignored[b]; });
  std::vector<bool> gt_taken(gts.size(), false);

  for (std::size_t d = 0; d < dets.size(); ++d) {
    double best = std::min(tau, 1.0 - 1e-10);
    std::optional<std::size_t> hit;
    for (std::size_t g : order) {
      if (gt_taken[g]) continue;
      // Once a real match exists, ignored ground truths cannot displace it.
      if (hit && !gt_ignored[*hit] && gt_ignored[g]) break;
      if (!class_agnostic && gts[g].category_id != dets[d].category_id) continue;
      if (ious[d][g] < best) continue;
      best = ious[d][g];
      hit = g;
    }
    DetOutcome o{dets[d].id, dets[d].image_id, dets[d].score, false, false, std::nullopt, 0.0};
    if (hit) {
      gt_taken[*hit] = true;
      o.matched = true;
      o.ignored = gt_ignored[*hit];
      o.gt_id = gts[*hit].id;
      o.iou = ious[d][*hit];
    } else {
      o.ignored = !bucket.contains(static_cast<double>(dets[d].mask.area()));
    }
    m.outcomes.push_back(o);
  }
  return m;
}

inline std::vector<std::vector<double>> iou_matrix(std::span<const EvalDetection> dets,
                                                   std::span<const EvalGroundTruth> gts) {
  std::vector<std::vector<double>> out(dets.size(), std::vector<double>(gts.size()));
  for (std::size_t d = 0; d < dets.size(); ++d) {
    for (std::size_t g = 0; g < gts.size(); ++g) out[d][g] = iou(dets[d].mask, gts[g].mask);
  }
  return out;
}

/// Matches the detections of one image against its ground truths.
/// Detections are put in canonical order (score desc, id asc) first.
inline Matching match_instances(std::vector<EvalDetection> dets, std::span<const EvalGroundTruth> gts, double tau,
                                const AreaBucket& bucket, bool class_agnostic) {
  std::stable_sort(dets.begin(), dets.end(), detection_order);
  return match_with_ious(dets, gts, iou_matrix(dets, gts), tau, bucket, class_agnostic);
}

/// Pools matchings from many images: sorts by score, builds the
/// precision/recall staircase, makes precision non-increasing from the
/// right and averages it at recall 0.00, 0.01, ..., 1.00. Absent when no
/// ground truth falls in the bucket.
inline std::optional<double> average_precision(std::span<const Matching> matchings) {
  std::size_t positives = 0;
  std::vector<const DetOutcome*> pooled;
  for (const auto& m : matchings) {
    positives += m.positive_gts;
    for (const auto& o : m.outcomes) {
      if (!o.ignored) pooled.push_back(&o);
    }
  }
  if (positives == 0) return std::nullopt;
  std::stable_sort(pooled.begin(), pooled.end(), [](const DetOutcome* a, const DetOutcome* b) {
    if (a->score != b->score) return a->score > b->score;
    if (a->image_id != b->image_id) return a->image_id < b->image_id;
    return a->det_id < b->det_id;
  });
  const std::size_t n = pooled.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    pooled[i]->matched ? ++tp : ++fp;
    recall[i] = static_cast<double>(tp) / static_cast<double>(positives);
    precision[i] = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

struct MatchedPair {
  double tau = 0.0;
  std::int64_t image_id = 0;
  std::int64_t det_id = 0;
  std::int64_t gt_id = 0;
  double iou = 0.0;
};

struct ThresholdAp {
  double tau = 0.0;
  std::optional<double> ap;
};

struct EvalResult {
  std::optional<double> map;
  std::optional<double> ap50;
  std::optional<double> ap_s;
  std::optional<double> ap_m;
  std::optional<double> ap_l;
  std::vector<ThresholdAp> per_threshold;  ///< all-size bucket
  std::vector<MatchedPair> pairs;          ///< all-size bucket, every threshold
};

namespace detail {

inline std::optional<double> mean_present(const std::vector<std::optional<double>>& xs) {
  double s = 0;
  std::size_t n = 0;
  for (const auto& x : xs) {
    if (x) {
      s += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

struct PreparedGroup {
  std::int64_t image_id;
  std::int64_t category;
  std::vector<EvalDetection> dets;     // canonical order, capped
  std::vector<EvalGroundTruth> gts;    // annotation order
  std::vector<std::vector<double>> ious;
};

}  // namespace detail

/// Scores `dets` against `gts`. Class-aware mode averages AP over the
/// categories that have ground truth before averaging over thresholds;
/// class-agnostic mode treats every instance as one category.
inline EvalResult evaluate(const DetectionSet& dets, const AnnotationSet& gts, const EvalConfig& cfg = {}) {
  cfg.validate();
  std::set<std::int64_t> image_ids;
  for (const auto& im : gts.images) image_ids.insert(im.id);
  std::set<std::int64_t> unknown;
  for (const auto& d : dets.detections) {
    if (!image_ids.count(d.image_id)) unknown.insert(d.image_id);
  }
  if (!unknown.empty()) {
    std::string list;
    for (auto id : unknown) list += (list.empty() ? "" : ", ") + std::to_string(id);
    throw SchemaError("detections reference unknown image ids: " + list);
  }

  auto key_of = [&](std::int64_t category) { return cfg.class_agnostic ? std::int64_t{0} : category; };
  std::map<std::pair<std::int64_t, std::int64_t>, detail::PreparedGroup> groups;
  auto group = [&](std::int64_t image, std::int64_t cat) -> detail::PreparedGroup& {
    auto [it, fresh] = groups.try_emplace({image, cat});
    if (fresh) {
      it->second.image_id = image;
      it->second.category = cat;
    }
    return it->second;
  };
  for (const auto& a : gts.annotations) {
    group(a.image_id, key_of(a.category_id))
        .gts.push_back({a.id, a.image_id, a.category_id, static_cast<double>(a.area),
                        InstanceMask::from_rle(a.segmentation)});
  }
  for (std::size_t i = 0; i < dets.detections.size(); ++i) {
    const auto& d = dets.detections[i];
    group(d.image_id, key_of(d.category_id))
        .dets.push_back({d.id.value_or(static_cast<std::int64_t>(i)), d.image_id, d.category_id, d.score,
                         InstanceMask::from_rle(d.segmentation)});
  }
  std::set<std::int64_t> categories;
  for (auto& [key, g] : groups) {
    std::stable_sort(g.dets.begin(), g.dets.end(), detection_order);
    if (g.dets.size() > static_cast<std::size_t>(cfg.max_detections_per_image)) {
      g.dets.resize(static_cast<std::size_t>(cfg.max_detections_per_image));
    }
    g.ious = iou_matrix(g.dets, g.gts);
    categories.insert(g.category);
  }

  EvalResult result;
  auto bucket_map = [&](const AreaBucket& bucket, double tau, bool record) -> std::optional<double> {
    std::map<std::int64_t, std::vector<Matching>> by_category;
    for (const auto& [key, g] : groups) {
      by_category[g.category].push_back(
          match_with_ious(g.dets, g.gts, g.ious, tau, bucket, cfg.class_agnostic));
      if (record && cfg.collect_pairs) {
        for (const auto& o : by_category[g.category].back().outcomes) {
          if (o.matched) result.pairs.push_back({tau, o.image_id, o.det_id, *o.gt_id, o.iou});
        }
      }
    }
    std::vector<std::optional<double>> per_category;
    for (auto c : categories) per_category.push_back(average_precision(by_category[c]));
    return detail::mean_present(per_category);
  };
  auto sweep = [&](const AreaBucket& bucket, bool record) {
    std::vector<std::optional<double>> aps;
    for (double tau : cfg.iou_thresholds) {
      aps.push_back(bucket_map(bucket, tau, record));
      if (record) result.per_threshold.push_back({tau, aps.back()});
    }
    return detail::mean_present(aps);
  };

  result.map = sweep(cfg.all(), true);
  result.ap50.reset();
  for (const auto& t : result.per_threshold) {
    if (t.tau == 0.5) result.ap50 = t.ap;
  }
  if (std::find(cfg.iou_thresholds.begin(), cfg.iou_thresholds.end(), 0.5) == cfg.iou_thresholds.end()) {
    result.ap50 = bucket_map(cfg.all(), 0.5, false);
  }
  result.ap_s = sweep(cfg.small(), false);
  result.ap_m = sweep(cfg.medium(), false);
  result.ap_l = sweep(cfg.large(), false);
  return result;
}

inline ojson to_json(const EvalResult& r) {
  auto opt = [](const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); };
  ojson j;
  j["mAP"] = opt(r.map);
  j["AP50"] = opt(r.ap50);
  j["APs"] = opt(r.ap_s);
  j["APm"] = opt(r.ap_m);
  j["APl"] = opt(r.ap_l);
  auto table = ojson::array();
  for (const auto& t : r.per_threshold) table.push_back(ojson{{"iou", t.tau}, {"AP", opt(t.ap)}});
  j["per_threshold"] = std::move(table);
  return j;
}

}  // namespace planksynth
