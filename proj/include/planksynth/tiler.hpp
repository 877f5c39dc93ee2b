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

// Overlapping tiling of large images, lifting of per-tile detections to
// the full frame, and greedy IoU merging of duplicates at tile seams.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "planksynth/dataset_io.hpp"
#include "planksynth/errors.hpp"
#include "planksynth/mask.hpp"
#include "planksynth/raster.hpp"

namespace planksynth {

struct TileOrigin {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const TileOrigin&, const TileOrigin&) = default;
};

struct TilePlan {
  int image_width = 0;
  int image_height = 0;
  int tile = 1000;
  int overlap = 200;
  std::vector<TileOrigin> tiles;  ///< sorted by (x, y)

  /// Tile extent; smaller than `tile` only when the image itself is.
  int tile_width() const { return std::min(tile, image_width); }
  int tile_height() const { return std::min(tile, image_height); }
  BBox rect(std::size_t i) const { return {tiles[i].x, tiles[i].y, tile_width(), tile_height()}; }

  friend bool operator==(const TilePlan&, const TilePlan&) = default;
};

namespace detail {

inline std::vector<int> axis_origins(int length, int tile, int stride) {
  if (length <= tile) return {0};
  std::vector<int> out;
  for (int o = 0; o + tile <= length; o += stride) out.push_back(o);
  if (out.back() + tile < length) out.push_back(length - tile);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

/// Origins at multiples of (tile - overlap) along each axis, plus one
/// clamped origin per axis when the last regular tile stops short.
inline TilePlan plan_tiles(int image_width, int image_height, int tile = 1000, int overlap = 200) {
  if (overlap < 0 || tile <= overlap) {
    throw ConfigError("plan_tiles: need tile > overlap >= 0 (tile " + std::to_string(tile) + ", overlap " +
                      std::to_string(overlap) + ")");
  }
  if (image_width < 1 || image_height < 1) throw ConfigError("plan_tiles: image must be at least 1x1");
  TilePlan plan{image_width, image_height, tile, overlap, {}};
  const int stride = tile - overlap;
  const auto xs = detail::axis_origins(image_width, tile, stride);
  const auto ys = detail::axis_origins(image_height, tile, stride);
  for (int x : xs) {
    for (int y : ys) plan.tiles.push_back({x, y});
  }
  return plan;
}

inline ojson to_json(const TilePlan& plan) {
  ojson j;
  j["width"] = plan.image_width;
  j["height"] = plan.image_height;
  j["tile"] = plan.tile;
  j["overlap"] = plan.overlap;
  auto tiles = ojson::array();
  for (std::size_t i = 0; i < plan.tiles.size(); ++i) {
    tiles.push_back(ojson{{"index", i}, {"x", plan.tiles[i].x}, {"y", plan.tiles[i].y}});
  }
  j["tiles"] = std::move(tiles);
  return j;
}

inline TilePlan tile_plan_from_json(const ojson& j, const std::string& where = "tile plan") {
  detail::RecordReader r(j, where);
  TilePlan plan;
  plan.image_width = static_cast<int>(r.integer("width"));
  plan.image_height = static_cast<int>(r.integer("height"));
  plan.tile = static_cast<int>(r.integer("tile"));
  plan.overlap = static_cast<int>(r.integer("overlap"));
  const auto& tiles = r.field("tiles");
  if (!tiles.is_array()) throw SchemaError(where + ": 'tiles' must be an array");
  for (const auto& t : tiles) {
    detail::RecordReader tr(t, where + " tile");
    TileOrigin o{static_cast<int>(tr.integer("x")), static_cast<int>(tr.integer("y"))};
    if (o.x < 0 || o.y < 0 || o.x + plan.tile_width() > plan.image_width ||
        o.y + plan.tile_height() > plan.image_height) {
      throw SchemaError(where + ": tile at (" + std::to_string(o.x) + ", " + std::to_string(o.y) +
                        ") leaves the image");
    }
    plan.tiles.push_back(o);
  }
  return plan;
}

inline TilePlan read_tile_plan(const std::filesystem::path& path) {
  return tile_plan_from_json(detail::read_json_file(path), path.string());
}

struct Tile {
  TileOrigin origin;
  Raster image;
};

inline Raster crop_raster(const Raster& img, const BBox& r) {
  Raster out(r.w, r.h, img.channels);
  const std::size_t row = static_cast<std::size_t>(r.w) * img.channels;
  for (int y = 0; y < r.h; ++y) {
    const auto* src = img.data.data() + img.index(r.x, r.y + y);
    std::copy(src, src + row, out.data.data() + out.index(0, y));
  }
  return out;
}

inline std::vector<Tile> crop(const Raster& img, const TilePlan& plan) {
  if (img.width != plan.image_width || img.height != plan.image_height) {
    throw ShapeMismatch("crop: plan is for " + std::to_string(plan.image_width) + "x" +
                        std::to_string(plan.image_height) + ", image is " + std::to_string(img.width) + "x" +
                        std::to_string(img.height));
  }
  std::vector<Tile> out;
  out.reserve(plan.tiles.size());
  for (std::size_t i = 0; i < plan.tiles.size(); ++i) out.push_back({plan.tiles[i], crop_raster(img, plan.rect(i))});
  return out;
}

/// Re-embeds tile-frame detections in the full image frame. Each lifted
/// detection remembers its tile rectangle as `window`.
inline DetectionSet lift_detections(const DetectionSet& dets, TileOrigin origin, int image_width,
                                    int image_height) {
  DetectionSet out;
  out.detections.reserve(dets.detections.size());
  for (const auto& d : dets.detections) {
    const auto mask = InstanceMask::from_rle(d.segmentation);
    Detection lifted = d;
    lifted.segmentation = reframe(mask, origin.x, origin.y, image_width, image_height).rle();
    const BBox window = intersect(BBox{origin.x, origin.y, mask.width(), mask.height()},
                                  BBox{0, 0, image_width, image_height});
    lifted.window = window;
    lifted.tile.reset();
    out.detections.push_back(std::move(lifted));
  }
  return out;
}

struct MergeConfig {
  double iou_threshold = 0.5;
  /// Compare lifted detections only inside the overlap of their source
  /// tiles, so a fragment truncated at a tile edge still matches the
  /// complete instance from the neighbouring tile.
  bool seam_aware = true;

  void validate() const {
    if (!(iou_threshold > 0 && iou_threshold <= 1)) throw ConfigError("iou_merge_threshold must be in (0, 1]");
  }
};

namespace detail {

inline double restricted_iou(const InstanceMask& a, const InstanceMask& b, const BBox& region) {
  const BBox r = intersect(region, intersect(bounding_union(a.bbox(), b.bbox()), region));
  if (r.empty()) return 0.0;
  const Bitmap wa = decode_window(a, r), wb = decode_window(b, r);
  std::uint64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < wa.bits.size(); ++i) {
    inter += (wa.bits[i] & wb.bits[i]);
    uni += (wa.bits[i] | wb.bits[i]);
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct MergeItem {
  Detection det;
  InstanceMask mask;
};

inline double merge_similarity(const MergeItem& a, const MergeItem& b, const MergeConfig& cfg) {
  if (intersect(a.mask.bbox(), b.mask.bbox()).empty()) return 0.0;
  if (cfg.seam_aware && a.det.window && b.det.window) {
    const BBox shared = intersect(*a.det.window, *b.det.window);
    if (!shared.empty() && !(shared == *a.det.window && shared == *b.det.window)) {
      return restricted_iou(a.mask, b.mask, shared);
    }
  }
  const std::uint64_t inter = intersection_area(a.mask, b.mask);
  const std::uint64_t uni = a.mask.area() + b.mask.area() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// One greedy pass. Returns true when any two inputs were merged.
inline bool merge_pass(std::vector<MergeItem>& items, const MergeConfig& cfg) {
  // Score descending; equal scores put larger masks first so complete
  // instances seed clusters before fragments.
  std::stable_sort(items.begin(), items.end(), [](const MergeItem& a, const MergeItem& b) {
    if (a.det.score != b.det.score) return a.det.score > b.det.score;
    return a.mask.area() > b.mask.area();
  });
  struct Cluster {
    std::size_t seed;
    MergeItem merged;
  };
  std::vector<Cluster> clusters;
  bool changed = false;
  for (std::size_t i = 0; i < items.size(); ++i) {
    bool joined = false;
    for (auto& c : clusters) {
      if (merge_similarity(items[c.seed], items[i], cfg) >= cfg.iou_threshold) {
        c.merged.mask = mask_union(c.merged.mask, items[i].mask);
        if (c.merged.det.window && items[i].det.window) {
          c.merged.det.window = bounding_union(*c.merged.det.window, *items[i].det.window);
        } else {
          c.merged.det.window.reset();
        }
        joined = changed = true;
        break;
      }
    }
    if (!joined) clusters.push_back({i, items[i]});
  }
  std::vector<MergeItem> next;
  next.reserve(clusters.size());
  for (auto& c : clusters) {
    c.merged.det.segmentation = c.merged.mask.rle();
    next.push_back(std::move(c.merged));
  }
  items = std::move(next);
  return changed;
}

}  // namespace detail

/// Greedy agglomeration in score order: each detection joins the first
/// cluster whose seed has IoU >= threshold with it, otherwise it seeds a
/// new cluster. A cluster emits the union of its masks with the seed's
/// score and category (the seed is the highest-scoring member). Passes
/// repeat until nothing merges, so the output is a fixed point.
inline DetectionSet merge_detections(const DetectionSet& dets, const MergeConfig& cfg = {}) {
  cfg.validate();
  std::vector<detail::MergeItem> items;
  items.reserve(dets.detections.size());
  for (const auto& d : dets.detections) items.push_back({d, InstanceMask::from_rle(d.segmentation)});
  for (std::size_t i = 1; i < items.size(); ++i) {
    detail::require_same_frame(items[0].mask, items[i].mask);
  }
  while (detail::merge_pass(items, cfg)) {
  }
  DetectionSet out;
  for (auto& it : items) out.detections.push_back(std::move(it.det));
  return out;
}

/// Merges each image's detections independently; output grouped by image
/// id (ascending) and renumbered.
inline DetectionSet merge_by_image(const DetectionSet& dets, const MergeConfig& cfg = {}) {
  std::map<std::int64_t, DetectionSet> per_image;
  for (const auto& d : dets.detections) per_image[d.image_id].detections.push_back(d);
  DetectionSet out;
  std::int64_t id = 1;
  for (auto& [image_id, set] : per_image) {
    for (auto& d : merge_detections(set, cfg).detections) {
      d.id = id++;
      out.detections.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace planksynth
