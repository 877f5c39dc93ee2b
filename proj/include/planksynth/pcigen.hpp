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

// Pseudo community image synthesis: seeded recipes, compositing of
// transformed cutouts over a processed background, and visible-pixel
// instance labels.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "planksynth/dataset_io.hpp"
#include "planksynth/errors.hpp"
#include "planksynth/mask.hpp"
#include "planksynth/png_io.hpp"
#include "planksynth/raster.hpp"
#include "planksynth/rng.hpp"
#include "planksynth/taxonomy.hpp"

namespace planksynth {

struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;  ///< inclusive
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const RealRange&, const RealRange&) = default;
};

struct PciConfig {
  int canvas_width = 1000;
  int canvas_height = 1000;
  IntRange count_range{6, 10};
  RealRange sigma_range{0.0, 2.0};      ///< half-open
  RealRange rotation_range{0.0, 360.0};  ///< degrees, half-open
  RealRange scale_range{0.5, 1.5};
  double flip_prob = 0.5;
  double min_visible_fraction = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const PciConfig&, const PciConfig&) = default;

  void validate() const {
    if (canvas_width < 1 || canvas_height < 1) throw ConfigError("canvas must be at least 1x1");
    if (count_range.lo < 1 || count_range.hi < count_range.lo) {
      throw ConfigError("count_range must satisfy 1 <= low <= high");
    }
    if (count_range.hi > 30000) throw ConfigError("count_range high exceeds 30000");
    if (sigma_range.lo < 0 || sigma_range.hi < sigma_range.lo) {
      throw ConfigError("sigma_range must satisfy 0 <= low <= high");
    }
    if (rotation_range.hi < rotation_range.lo) throw ConfigError("rotation_range low exceeds high");
    if (!(scale_range.lo > 0) || scale_range.hi < scale_range.lo) {
      throw ConfigError("scale_range must satisfy 0 < low <= high");
    }
    if (!(flip_prob >= 0 && flip_prob <= 1)) throw ConfigError("flip_prob must be in [0, 1]");
    if (!(min_visible_fraction >= 0 && min_visible_fraction <= 1)) {
      throw ConfigError("min_visible_fraction must be in [0, 1]");
    }
  }

  ojson to_json() const {
    ojson j;
    j["canvas"] = {canvas_width, canvas_height};
    j["count_range"] = {count_range.lo, count_range.hi};
    j["sigma_range"] = {sigma_range.lo, sigma_range.hi};
    j["rotation_range"] = {rotation_range.lo, rotation_range.hi};
    j["scale_range"] = {scale_range.lo, scale_range.hi};
    j["flip_prob"] = flip_prob;
    j["min_visible_fraction"] = min_visible_fraction;
    j["seed"] = seed;
    return j;
  }

  /// Reads the recognised keys of `j`, keeping defaults for absent ones.
  static PciConfig from_json(const nlohmann::json& j) {
    PciConfig c;
    if (!j.is_object()) throw ConfigError("PCI config must be a JSON object");
    auto pair = [&](const char* key, auto& a, auto& b) {
      if (!j.contains(key)) return;
      const auto& v = j[key];
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(std::string("'") + key + "' must be a two-element numeric array");
      }
      a = v[0].get<std::remove_reference_t<decltype(a)>>();
      b = v[1].get<std::remove_reference_t<decltype(b)>>();
    };
    auto number = [&](const char* key, double& dst) {
      if (!j.contains(key)) return;
      if (!j[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
      dst = j[key].get<double>();
    };
    pair("canvas", c.canvas_width, c.canvas_height);
    pair("count_range", c.count_range.lo, c.count_range.hi);
    pair("sigma_range", c.sigma_range.lo, c.sigma_range.hi);
    pair("rotation_range", c.rotation_range.lo, c.rotation_range.hi);
    pair("scale_range", c.scale_range.lo, c.scale_range.hi);
    number("flip_prob", c.flip_prob);
    number("min_visible_fraction", c.min_visible_fraction);
    if (j.contains("seed")) {
      if (!j["seed"].is_number_integer()) throw ConfigError("'seed' must be an integer");
      c.seed = j["seed"].get<std::uint64_t>();
    }
    c.validate();
    return c;
  }
};

/// A background-free cutout of one individual.
struct Individual {
  std::string name;
  Raster image;
  Bitmap mask;  ///< same frame as image
  std::int64_t taxon_id = 0;
};

struct SourcePools {
  std::vector<std::string> background_names;
  std::vector<Raster> backgrounds;
  std::vector<Individual> individuals;

  void validate() const {
    if (backgrounds.empty()) throw ConfigError("source pools: no background images");
    if (individuals.empty()) throw ConfigError("source pools: no individual images");
    for (const auto& ind : individuals) {
      if (ind.image.width != ind.mask.width || ind.image.height != ind.mask.height) {
        throw ConfigError("individual '" + ind.name + "': image and mask sizes differ");
      }
      if (ind.mask.count() == 0) throw ConfigError("individual '" + ind.name + "': empty mask");
    }
  }
};

/// Loads every *.png in `background_dir` (sorted by name) and the cutouts
/// listed in `individual_dir/individuals.json` as
/// `[{"image": "a.png", "mask": "a_mask.png", "taxon_id": 12}, ...]`.
inline SourcePools load_pools(const std::filesystem::path& background_dir,
                              const std::filesystem::path& individual_dir) {
  namespace fs = std::filesystem;
  SourcePools pools;
  if (!fs::is_directory(background_dir)) throw IoError(background_dir.string() + ": not a directory");
  std::vector<fs::path> bg_files;
  for (const auto& e : fs::directory_iterator(background_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") bg_files.push_back(e.path());
  }
  std::sort(bg_files.begin(), bg_files.end());
  for (const auto& p : bg_files) {
    pools.background_names.push_back(p.filename().string());
    pools.backgrounds.push_back(read_png(p));
  }

  const fs::path listing = individual_dir / "individuals.json";
  const auto j = detail::read_json_file(listing);
  if (!j.is_array()) throw SchemaError(listing.string() + ": expected an array");
  for (const auto& rec : j) {
    detail::RecordReader r(rec, listing.string() + " entry " + rec.dump());
    Individual ind;
    ind.name = r.string("image");
    ind.image = read_png(individual_dir / ind.name);
    ind.mask = read_mask_png(individual_dir / r.string("mask"));
    ind.taxon_id = r.integer("taxon_id");
    pools.individuals.push_back(std::move(ind));
  }
  pools.validate();
  return pools;
}

struct Placement {
  std::size_t individual = 0;
  bool flip_h = false;
  bool flip_v = false;
  double angle = 0.0;
  double scale = 1.0;
  Offset offset;  ///< top-left of the transformed cutout canvas

  AffineParams params() const { return {flip_h, flip_v, angle, scale}; }
  friend bool operator==(const Placement&, const Placement&) = default;
};

/// Every random choice behind one image; replaying it is deterministic.
struct PciRecipe {
  std::size_t background = 0;
  bool bg_flip_h = false;
  bool bg_flip_v = false;
  double sigma = 0.0;
  std::vector<Placement> placements;  ///< paste order; later occludes earlier

  friend bool operator==(const PciRecipe&, const PciRecipe&) = default;

  ojson to_json() const {
    ojson j;
    j["background"] = background;
    j["bg_flip"] = {bg_flip_h, bg_flip_v};
    j["sigma"] = sigma;
    auto ps = ojson::array();
    for (const auto& p : placements) {
      ojson q;
      q["individual"] = p.individual;
      q["flip"] = {p.flip_h, p.flip_v};
      q["angle"] = p.angle;
      q["scale"] = p.scale;
      q["offset"] = {p.offset.x, p.offset.y};
      ps.push_back(std::move(q));
    }
    j["placements"] = std::move(ps);
    return j;
  }

  std::string digest() const { return fnv1a_hex(to_json().dump()); }
};

inline constexpr int kMaxPlacementAttempts = 20;

/// Draws the recipe for image `image_index`. All randomness comes from the
/// stream keyed by (cfg.seed, image_index), so recipes can be sampled in
/// any order. Offsets are uniform over positions where at least one mask
/// pixel lands on the canvas.
inline PciRecipe sample_recipe(const PciConfig& cfg, const SourcePools& pools, std::uint64_t image_index) {
  cfg.validate();
  if (pools.backgrounds.empty() || pools.individuals.empty()) {
    throw ConfigError("sample_recipe: source pools must not be empty");
  }
  CounterRng rng(cfg.seed, image_index);
  PciRecipe recipe;
  recipe.background = static_cast<std::size_t>(rng.below(pools.backgrounds.size()));
  recipe.bg_flip_h = rng.bernoulli(cfg.flip_prob);
  recipe.bg_flip_v = rng.bernoulli(cfg.flip_prob);
  recipe.sigma = rng.uniform(cfg.sigma_range.lo, cfg.sigma_range.hi);
  const auto count = rng.between(cfg.count_range.lo, cfg.count_range.hi);
  const int W = cfg.canvas_width, H = cfg.canvas_height;

  for (std::int64_t k = 0; k < count; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      Placement p;
      p.individual = static_cast<std::size_t>(rng.below(pools.individuals.size()));
      p.flip_h = rng.bernoulli(cfg.flip_prob);
      p.flip_v = rng.bernoulli(cfg.flip_prob);
      p.angle = rng.uniform(cfg.rotation_range.lo, cfg.rotation_range.hi);
      p.scale = cfg.scale_range.lo == cfg.scale_range.hi
                    ? cfg.scale_range.lo
                    : rng.uniform(cfg.scale_range.lo, cfg.scale_range.hi);
      const Bitmap warped = detail::warp_mask(pools.individuals[p.individual].mask, p.params());
      const InstanceMask shape = rle_encode(warped);
      if (shape.empty()) continue;  // degenerate transform: re-draw
      const BBox& bb = shape.bbox();
      // Rejection over the bbox-intersecting offsets; a hit always exists.
      for (;;) {
        p.offset.x = static_cast<int>(rng.between(-(bb.x + bb.w - 1), W - 1 - bb.x));
        p.offset.y = static_cast<int>(rng.between(-(bb.y + bb.h - 1), H - 1 - bb.y));
        const BBox visible = intersect(bb, BBox{-p.offset.x, -p.offset.y, W, H});
        if (!visible.empty() && decode_window(shape, visible).count() > 0) break;
      }
      recipe.placements.push_back(p);
      placed = true;
    }
    if (!placed) {
      throw DegenerateTransform("image " + std::to_string(image_index) + ", placement " +
                                std::to_string(k) + ": no usable transform after " +
                                std::to_string(kMaxPlacementAttempts) + " attempts");
    }
  }
  return recipe;
}

struct PciLabel {
  std::size_t placement = 0;
  std::int64_t taxon_id = 0;
  InstanceMask mask;       ///< visible pixels only
  InstanceMask footprint;  ///< all pasted pixels of this individual
  double visible_fraction = 0.0;
};

struct Pci {
  Raster image;
  std::vector<PciLabel> labels;
};

/// Background after flips, resizing to the canvas and blur.
inline Raster processed_background(const PciRecipe& recipe, const PciConfig& cfg, const SourcePools& pools) {
  if (recipe.background >= pools.backgrounds.size()) throw ConfigError("recipe background out of range");
  Raster bg = flip(pools.backgrounds[recipe.background], recipe.bg_flip_h, recipe.bg_flip_v);
  bg = resize_bilinear(bg, cfg.canvas_width, cfg.canvas_height);
  return gaussian_blur(bg, recipe.sigma);
}

/// Replays a recipe. Individuals are pasted in order; each label holds the
/// pixels of its individual that are on the canvas and not covered by a
/// later individual. Labels with no visible pixels or a visible fraction
/// below cfg.min_visible_fraction are dropped.
inline Pci synthesize(const PciRecipe& recipe, const PciConfig& cfg, const SourcePools& pools) {
  const int W = cfg.canvas_width, H = cfg.canvas_height;
  Pci out{processed_background(recipe, cfg, pools), {}};
  std::vector<std::int16_t> owner(static_cast<std::size_t>(W) * H, -1);

  struct Pasted {
    Bitmap mask;
    BBox rect;
    std::uint64_t full_area;
  };
  std::vector<Pasted> pasted;
  pasted.reserve(recipe.placements.size());

  for (std::size_t k = 0; k < recipe.placements.size(); ++k) {
    const Placement& p = recipe.placements[k];
    if (p.individual >= pools.individuals.size()) throw ConfigError("recipe individual out of range");
    const Individual& ind = pools.individuals[p.individual];
    const Raster src = convert_channels(ind.image, out.image.channels);
    auto t = transform_cutout(src, ind.mask, p.params());
    composite_into(out.image, t.image, t.mask, p.offset);
    const BBox rect = intersect(BBox{p.offset.x, p.offset.y, t.mask.width, t.mask.height}, BBox{0, 0, W, H});
    for (int y = rect.y; y < rect.y + rect.h; ++y) {
      for (int x = rect.x; x < rect.x + rect.w; ++x) {
        if (t.mask.at(x - p.offset.x, y - p.offset.y)) {
          owner[static_cast<std::size_t>(y) * W + x] = static_cast<std::int16_t>(k);
        }
      }
    }
    const std::uint64_t full = t.mask.count();
    pasted.push_back({std::move(t.mask), rect, full});
  }

  for (std::size_t k = 0; k < pasted.size(); ++k) {
    const auto& pk = pasted[k];
    if (pk.rect.empty()) continue;
    Bitmap visible(pk.rect.w, pk.rect.h);
    Bitmap footprint(pk.rect.w, pk.rect.h);
    const Offset& off = recipe.placements[k].offset;
    std::uint64_t n_visible = 0;
    for (int y = 0; y < pk.rect.h; ++y) {
      for (int x = 0; x < pk.rect.w; ++x) {
        const int cx = pk.rect.x + x, cy = pk.rect.y + y;
        footprint.at(x, y) = pk.mask.at(cx - off.x, cy - off.y);
        if (owner[static_cast<std::size_t>(cy) * W + cx] == static_cast<std::int16_t>(k)) {
          visible.at(x, y) = 1;
          ++n_visible;
        }
      }
    }
    if (n_visible == 0) continue;
    const double fraction = static_cast<double>(n_visible) / static_cast<double>(pk.full_area);
    if (fraction < cfg.min_visible_fraction) continue;
    const auto& ind = pools.individuals[recipe.placements[k].individual];
    out.labels.push_back(PciLabel{k, ind.taxon_id, embed(visible, pk.rect.x, pk.rect.y, W, H),
                                  embed(footprint, pk.rect.x, pk.rect.y, W, H), fraction});
  }
  return out;
}

struct GenerateOptions {
  unsigned jobs = 1;
  LabelRank label_rank = LabelRank::Family;
  bool write_images = true;
  int png_compression = 1;
};

inline std::string image_file_name(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "images/%06llu.png", static_cast<unsigned long long>(index));
  return buf;
}

/// Synthesizes `n_images` PCIs into out_dir/images/ and writes
/// out_dir/annotations.json. The manifest bytes depend only on the config,
/// pools and taxonomy, never on `options.jobs`.
inline AnnotationSet generate_dataset(const PciConfig& cfg, const SourcePools& pools, const Taxonomy& taxonomy,
                                      std::uint64_t n_images, const std::filesystem::path& out_dir,
                                      const GenerateOptions& options = {}) {
  namespace fs = std::filesystem;
  cfg.validate();
  pools.validate();

  std::map<std::int64_t, const Taxon*> label_of;  // individual taxon -> label taxon
  std::map<std::int64_t, Category> categories;
  for (const auto& ind : pools.individuals) {
    const Taxon& t = taxonomy.ancestor_at(ind.taxon_id, options.label_rank);
    label_of[ind.taxon_id] = &t;
    categories.emplace(t.id, Category{t.id, t.name, t.rank, t.parent_id});
  }

  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec) throw IoError((out_dir / "images").string() + ": " + ec.message());

  struct ImageResult {
    std::string digest;
    std::vector<PciLabel> labels;
  };
  std::vector<ImageResult> results(n_images);
  std::vector<std::exception_ptr> errors(n_images);
  std::atomic<std::uint64_t> next{0};

  auto worker = [&] {
    for (std::uint64_t i = next++; i < n_images; i = next++) {
      try {
        const PciRecipe recipe = sample_recipe(cfg, pools, i);
        Pci pci = synthesize(recipe, cfg, pools);
        if (options.write_images) {
          write_png(out_dir / image_file_name(i), pci.image, options.png_compression);
        }
        for (auto& l : pci.labels) l.footprint = InstanceMask{};
        results[i] = ImageResult{recipe.digest(), std::move(pci.labels)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  AnnotationSet set;
  ojson config = cfg.to_json();
  config["label_rank"] = std::string(rank_name(to_rank(options.label_rank)));
  config["images"] = n_images;
  set.info.seed = cfg.seed;
  set.info.config_digest = fnv1a_hex(config.dump());
  set.info.config = std::move(config);
  for (auto& [id, c] : categories) set.categories.push_back(c);

  std::int64_t ann_id = 1;
  for (std::uint64_t i = 0; i < n_images; ++i) {
    const auto image_id = static_cast<std::int64_t>(i + 1);
    set.images.push_back(ImageRecord{image_id, image_file_name(i), cfg.canvas_width, cfg.canvas_height,
                                     results[i].digest});
    for (const auto& l : results[i].labels) {
      set.annotations.push_back(
          make_annotation(ann_id++, image_id, label_of.at(l.taxon_id)->id, l.mask, l.visible_fraction));
    }
  }
  write_manifest(set, out_dir / "annotations.json");
  return set;
}

}  // namespace planksynth
