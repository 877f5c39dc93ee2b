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

// Procedural source pools for demos and tests: a 16-family zooplankton
// taxonomy, blob-shaped cutouts and smooth gray backgrounds. Foreground
// samples stay in [8, 72] and background samples in [100, 180], so the
// two never coincide.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "planksynth/dataset_io.hpp"
#include "planksynth/pcigen.hpp"
#include "planksynth/png_io.hpp"
#include "planksynth/raster.hpp"
#include "planksynth/rng.hpp"
#include "planksynth/taxonomy.hpp"

namespace planksynth::demo {

inline Taxonomy taxonomy() {
  std::vector<Taxon> t = {
      {1, "Branchiopoda", Rank::Class, {}},
      {2, "Hexanauplia", Rank::Class, {}},
      {3, "Monogononta", Rank::Class, {}},
      {10, "Anomopoda", Rank::Order, 1},
      {11, "Ctenopoda", Rank::Order, 1},
      {12, "Haplopoda", Rank::Order, 1},
      {13, "Calanoida", Rank::Order, 2},
      {14, "Cyclopoida", Rank::Order, 2},
      {15, "Ploima", Rank::Order, 3},
  };
  const std::vector<std::pair<const char*, std::int64_t>> families = {
      {"Daphniidae", 10},    {"Bosminidae", 10},   {"Chydoridae", 10},    {"Moinidae", 10},
      {"Macrothricidae", 10}, {"Sididae", 11},     {"Holopediidae", 11},  {"Leptodoridae", 12},
      {"Diaptomidae", 13},   {"Temoridae", 13},    {"Cyclopidae", 14},    {"Oithonidae", 14},
      {"Brachionidae", 15},  {"Synchaetidae", 15}, {"Asplanchnidae", 15}, {"Trichocercidae", 15},
  };
  for (std::size_t i = 0; i < families.size(); ++i) {
    t.push_back({100 + static_cast<std::int64_t>(i), families[i].first, Rank::Family, families[i].second});
  }
  t.push_back({1000, "Daphnia", Rank::Genus, 100});
  t.push_back({1001, "Bosmina", Rank::Genus, 101});
  t.push_back({10000, "Daphnia galeata", Rank::Species, 1000});
  t.push_back({10001, "Bosmina longirostris", Rank::Species, 1001});
  return Taxonomy(std::move(t));
}

/// Label taxon used for individual `k` of family `f` (0-based): mostly the
/// family itself, sometimes a genus or species below it.
inline std::int64_t individual_taxon(std::size_t family, std::size_t k) {
  if (family == 0 && k % 3 == 1) return 1000;
  if (family == 0 && k % 3 == 2) return 10000;
  if (family == 1 && k % 2 == 1) return 10001;
  return 100 + static_cast<std::int64_t>(family);
}

/// A plankton-like cutout: an elliptical body with a few limbs, textured
/// dark on a zero (removed) background.
inline Individual make_individual(std::uint64_t seed, std::size_t index, int max_extent, int channels) {
  CounterRng rng(seed, 0x1d1d0000 + index);
  const int size = static_cast<int>(rng.between(max_extent / 2, max_extent));
  Raster img(size, size, channels, 0);
  Bitmap mask(size, size);
  struct Ellipse {
    double cx, cy, rx, ry, cos_t, sin_t;
  };
  std::vector<Ellipse> parts;
  const double c = size / 2.0;
  const double body_rx = size * rng.uniform(0.25, 0.42), body_ry = size * rng.uniform(0.15, 0.3);
  const double theta = rng.uniform(0, 3.14159265358979);
  parts.push_back({c, c, body_rx, body_ry, std::cos(theta), std::sin(theta)});
  const int limbs = static_cast<int>(rng.between(1, 4));
  for (int l = 0; l < limbs; ++l) {
    const double a = rng.uniform(0, 6.2831853);
    const double d = rng.uniform(0.2, 0.35) * size;
    const double t = rng.uniform(0, 3.14159265358979);
    parts.push_back({c + d * std::cos(a), c + d * std::sin(a), size * rng.uniform(0.08, 0.15),
                     size * rng.uniform(0.03, 0.06), std::cos(t), std::sin(t)});
  }
  const double tone = rng.uniform(20, 50);
  const double fx = rng.uniform(0.1, 0.4), fy = rng.uniform(0.1, 0.4);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      bool inside = false;
      for (const auto& e : parts) {
        const double dx = x + 0.5 - e.cx, dy = y + 0.5 - e.cy;
        const double u = (dx * e.cos_t + dy * e.sin_t) / e.rx, v = (-dx * e.sin_t + dy * e.cos_t) / e.ry;
        inside = inside || (u * u + v * v <= 1.0);
      }
      if (!inside) continue;
      mask.at(x, y) = 1;
      const double shade = tone + 14 * std::sin(x * fx) * std::cos(y * fy);
      for (int ch = 0; ch < channels; ++ch) {
        img.at(x, y, ch) = static_cast<std::uint8_t>(std::clamp(shade + 6 * ch, 8.0, 72.0));
      }
    }
  }
  Individual ind;
  ind.name = "ind_" + std::to_string(index) + ".png";
  ind.image = std::move(img);
  ind.mask = std::move(mask);
  return ind;
}

inline Raster make_background(std::uint64_t seed, std::size_t index, int width, int height, int channels) {
  CounterRng rng(seed, 0xb9000000 + index);
  const double base = rng.uniform(125, 155);
  const double ax = rng.uniform(0.003, 0.02), ay = rng.uniform(0.003, 0.02);
  const double px = rng.uniform(0, 6.28), py = rng.uniform(0, 6.28);
  Raster img(width, height, channels);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double smooth = 15 * std::sin(x * ax + px) + 10 * std::cos(y * ay + py);
      const double grain = static_cast<double>(splitmix64(seed ^ (static_cast<std::uint64_t>(y) * 0x9e37 + x + index * 0x7f4a7c15)) % 9) - 4.0;
      for (int ch = 0; ch < channels; ++ch) {
        img.at(x, y, ch) = static_cast<std::uint8_t>(std::clamp(base + smooth + grain + 3 * ch, 100.0, 180.0));
      }
    }
  }
  return img;
}

struct PoolSpec {
  std::size_t families = 16;
  std::size_t per_family = 10;
  std::size_t backgrounds = 6;
  int background_width = 1000;
  int background_height = 1000;
  int max_individual_extent = 120;
  int channels = 1;
  std::uint64_t seed = 7;
};

inline SourcePools make_pools(const PoolSpec& spec = {}) {
  SourcePools pools;
  for (std::size_t b = 0; b < spec.backgrounds; ++b) {
    pools.background_names.push_back("bg_" + std::to_string(b) + ".png");
    pools.backgrounds.push_back(make_background(spec.seed, b, spec.background_width, spec.background_height, spec.channels));
  }
  for (std::size_t f = 0; f < spec.families; ++f) {
    for (std::size_t k = 0; k < spec.per_family; ++k) {
      auto ind = make_individual(spec.seed, f * spec.per_family + k, spec.max_individual_extent, spec.channels);
      ind.taxon_id = individual_taxon(f, k);
      pools.individuals.push_back(std::move(ind));
    }
  }
  return pools;
}

/// Writes backgrounds/, individuals/ (with individuals.json) and
/// taxonomy.json under `dir`, in the layout load_pools() reads.
inline void write_pools(const std::filesystem::path& dir, const SourcePools& pools, const Taxonomy& tax) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "backgrounds");
  fs::create_directories(dir / "individuals");
  for (std::size_t b = 0; b < pools.backgrounds.size(); ++b) {
    write_png(dir / "backgrounds" / pools.background_names[b], pools.backgrounds[b]);
  }
  auto listing = ojson::array();
  for (const auto& ind : pools.individuals) {
    const std::string stem = fs::path(ind.name).stem().string();
    write_png(dir / "individuals" / ind.name, ind.image);
    write_mask_png(dir / "individuals" / (stem + "_mask.png"), ind.mask);
    listing.push_back(ojson{{"image", ind.name}, {"mask", stem + "_mask.png"}, {"taxon_id", ind.taxon_id}});
  }
  detail::write_text(dir / "individuals" / "individuals.json", listing.dump(1) + "\n");
  detail::write_text(dir / "taxonomy.json", tax.to_json().dump(1) + "\n");
}

}  // namespace planksynth::demo
