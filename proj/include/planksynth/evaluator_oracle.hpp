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

// Brute-force reference scorer for differential tests of evaluate().
// It shares only the input/output data types with evaluator.hpp: masks
// are expanded to pixel arrays, IoUs are counted pixel by pixel, and the
// matching and precision integration are written out independently.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "planksynth/dataset_io.hpp"
#include "planksynth/errors.hpp"
#include "planksynth/evaluator.hpp"

namespace planksynth::oracle {

inline constexpr std::size_t kMaxInstancesPerImage = 32;

namespace impl {

struct Pixels {
  std::vector<char> on;  // column-major, like the runs
  long count = 0;
};

inline Pixels expand(const Rle& rle) {
  Pixels p;
  p.on.assign(static_cast<std::size_t>(rle.height) * rle.width, 0);
  std::size_t at = 0;
  char value = 0;
  for (auto run : rle.counts) {
    for (std::uint32_t i = 0; i < run; ++i) {
      if (at >= p.on.size()) throw MalformedMask("oracle: runs overflow the frame");
      p.on[at++] = value;
    }
    value = static_cast<char>(1 - value);
  }
  if (at != p.on.size()) throw MalformedMask("oracle: runs do not fill the frame");
  for (char c : p.on) p.count += c;
  return p;
}

inline double pixel_iou(const Pixels& a, const Pixels& b) {
  if (a.on.size() != b.on.size()) throw ShapeMismatch("oracle: frame mismatch");
  long both = 0, either = 0;
  for (std::size_t i = 0; i < a.on.size(); ++i) {
    both += (a.on[i] && b.on[i]) ? 1 : 0;
    either += (a.on[i] || b.on[i]) ? 1 : 0;
  }
  return either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
}

struct Gt {
  std::int64_t id;
  std::int64_t cat;
  double area;
  Pixels px;
};

struct Dt {
  std::int64_t id;
  std::int64_t image;
  std::int64_t cat;
  double score;
  Pixels px;
};

struct Verdict {
  std::int64_t image;
  std::int64_t id;
  double score;
  int kind;  // 1 = TP, 0 = FP, -1 = not counted
  std::int64_t gt = -1;
  double iou = 0;
};

inline bool in_bucket(double area, int bucket, const EvalConfig& cfg) {
  switch (bucket) {
    case 1: return area < cfg.small_limit;
    case 2: return area >= cfg.small_limit && area <= cfg.large_limit;
    case 3: return area > cfg.large_limit;
    default: return true;
  }
}

// One image/category: dets already in rank order.
inline std::vector<Verdict> judge(const std::vector<Dt>& dts, const std::vector<Gt>& gts, double tau, int bucket,
                                  const EvalConfig& cfg, long& counted_gts) {
  const double need = tau < 1.0 - 1e-10 ? tau : 1.0 - 1e-10;
  std::vector<char> used(gts.size(), 0);
  for (const auto& g : gts) counted_gts += in_bucket(g.area, bucket, cfg) ? 1 : 0;
  std::vector<Verdict> out;
  for (const auto& d : dts) {
    // Phase 1: best free in-bucket ground truth; phase 2: best free
    // out-of-bucket one. Equal IoUs go to the later ground truth.
    long pick = -1;
    double pick_iou = 0;
    for (int phase = 0; phase < 2 && pick < 0; ++phase) {
      for (std::size_t g = 0; g < gts.size(); ++g) {
        const bool inside = in_bucket(gts[g].area, bucket, cfg);
        if (used[g] || inside != (phase == 0)) continue;
        if (!cfg.class_agnostic && gts[g].cat != d.cat) continue;
        const double v = pixel_iou(d.px, gts[g].px);
        if (v >= need && (pick < 0 || v >= pick_iou)) {
          pick = static_cast<long>(g);
          pick_iou = v;
        }
      }
    }
    Verdict v{d.image, d.id, d.score, 0};
    if (pick >= 0) {
      used[static_cast<std::size_t>(pick)] = 1;
      v.kind = in_bucket(gts[static_cast<std::size_t>(pick)].area, bucket, cfg) ? 1 : -1;
      v.gt = gts[static_cast<std::size_t>(pick)].id;
      v.iou = pick_iou;
    } else {
      v.kind = in_bucket(static_cast<double>(d.px.count), bucket, cfg) ? 0 : -1;
    }
    out.push_back(v);
  }
  return out;
}

inline std::optional<double> integrate(std::vector<Verdict> vs, long positives) {
  if (positives == 0) return std::nullopt;
  std::vector<Verdict> kept;
  for (const auto& v : vs) {
    if (v.kind >= 0) kept.push_back(v);
  }
  // Insertion sort keeps the oracle free of shared comparator code.
  for (std::size_t i = 1; i < kept.size(); ++i) {
    for (std::size_t j = i; j > 0; --j) {
      const auto& a = kept[j - 1];
      const auto& b = kept[j];
      const bool swap = a.score < b.score || (a.score == b.score && (a.image > b.image ||
                                                                     (a.image == b.image && a.id > b.id)));
      if (!swap) break;
      std::swap(kept[j - 1], kept[j]);
    }
  }
  std::vector<double> prec, rec;
  long tp = 0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    tp += kept[i].kind;
    rec.push_back(static_cast<double>(tp) / static_cast<double>(positives));
    prec.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
  }
  double total = 0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    double best = 0;
    bool reached = false;
    for (std::size_t i = 0; i < rec.size(); ++i) {
      if (rec[i] >= r) {
        reached = true;
        best = std::max(best, prec[i]);
      }
    }
    total += reached ? best : 0.0;
  }
  return total / 101.0;
}

inline std::optional<double> average(const std::vector<std::optional<double>>& xs) {
  double s = 0;
  int n = 0;
  for (const auto& x : xs) {
    if (x) {
      s += *x;
      ++n;
    }
  }
  return n == 0 ? std::nullopt : std::optional<double>(s / n);
}

}  // namespace impl

/// Reference implementation of evaluate() for small scenes. Refuses
/// (ConfigError) above kMaxInstancesPerImage ground truths or detections
/// in any image.
inline EvalResult oracle_evaluate(const DetectionSet& dets, const AnnotationSet& gts, const EvalConfig& cfg = {}) {
  std::set<std::int64_t> images;
  for (const auto& im : gts.images) images.insert(im.id);
  std::map<std::int64_t, std::size_t> n_gt, n_dt;
  for (const auto& a : gts.annotations) ++n_gt[a.image_id];
  for (const auto& d : dets.detections) {
    ++n_dt[d.image_id];
    if (!images.count(d.image_id)) throw SchemaError("oracle: unknown image id " + std::to_string(d.image_id));
  }
  for (const auto* counts : {&n_gt, &n_dt}) {
    for (const auto& [img, n] : *counts) {
      if (n > kMaxInstancesPerImage) throw ConfigError("oracle_evaluate: more than 32 instances in one image");
    }
  }

  // (image, category key) -> instances
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<impl::Gt>> gt_groups;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<impl::Dt>> dt_groups;
  std::set<std::int64_t> cats;
  for (const auto& a : gts.annotations) {
    const std::int64_t key = cfg.class_agnostic ? 0 : a.category_id;
    gt_groups[{a.image_id, key}].push_back({a.id, a.category_id, static_cast<double>(a.area),
                                            impl::expand(a.segmentation)});
    cats.insert(key);
  }
  for (std::size_t i = 0; i < dets.detections.size(); ++i) {
    const auto& d = dets.detections[i];
    const std::int64_t key = cfg.class_agnostic ? 0 : d.category_id;
    dt_groups[{d.image_id, key}].push_back({d.id ? *d.id : static_cast<std::int64_t>(i), d.image_id,
                                            d.category_id, d.score, impl::expand(d.segmentation)});
    cats.insert(key);
  }
  for (auto& [key, list] : dt_groups) {
    // Selection sort into rank order, then cap.
    for (std::size_t i = 0; i < list.size(); ++i) {
      std::size_t best = i;
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        if (list[j].score > list[best].score ||
            (list[j].score == list[best].score && list[j].id < list[best].id)) {
          best = j;
        }
      }
      std::swap(list[i], list[best]);
    }
    if (list.size() > static_cast<std::size_t>(cfg.max_detections_per_image)) {
      list.resize(static_cast<std::size_t>(cfg.max_detections_per_image));
    }
  }

  EvalResult res;
  auto score_at = [&](double tau, int bucket, bool record) {
    std::vector<std::optional<double>> per_cat;
    for (auto c : cats) {
      std::vector<impl::Verdict> all;
      long positives = 0;
      for (auto img : images) {
        static const std::vector<impl::Gt> no_gt;
        static const std::vector<impl::Dt> no_dt;
        auto gi = gt_groups.find({img, c});
        auto di = dt_groups.find({img, c});
        auto vs = impl::judge(di == dt_groups.end() ? no_dt : di->second,
                              gi == gt_groups.end() ? no_gt : gi->second, tau, bucket, cfg, positives);
        for (const auto& v : vs) {
          if (record && v.gt >= 0) res.pairs.push_back({tau, v.image, v.id, v.gt, v.iou});
        }
        all.insert(all.end(), vs.begin(), vs.end());
      }
      per_cat.push_back(impl::integrate(all, positives));
    }
    return impl::average(per_cat);
  };

  for (int bucket = 0; bucket < 4; ++bucket) {
    std::vector<std::optional<double>> per_tau;
    for (double tau : cfg.iou_thresholds) {
      per_tau.push_back(score_at(tau, bucket, bucket == 0 && cfg.collect_pairs));
      if (bucket == 0) res.per_threshold.push_back({tau, per_tau.back()});
    }
    const auto m = impl::average(per_tau);
    if (bucket == 0) res.map = m;
    if (bucket == 1) res.ap_s = m;
    if (bucket == 2) res.ap_m = m;
    if (bucket == 3) res.ap_l = m;
  }
  res.ap50 = score_at(0.5, 0, false);
  return res;
}

}  // namespace planksynth::oracle
