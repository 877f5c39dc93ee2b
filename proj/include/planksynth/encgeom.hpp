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

// Token geometry of a ViT encoder with a multi-scale pyramid: patchify,
// token grid <-> 2-D map, nearest-neighbour pyramid from tapped layers,
// and MAE-style random masking / restoration. Pure reshapes, no weights.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "planksynth/errors.hpp"
#include "planksynth/raster.hpp"
#include "planksynth/rng.hpp"

namespace planksynth {

struct EncoderSpec {
  int input_size = 384;
  int patch_size = 32;
  int depth = 24;
  std::vector<int> tap_layers{5, 8, 16};
  std::vector<int> pyramid_denominators{8, 16, 32};  ///< levels at 1/8, 1/16, 1/32
  int embed_dim = 1024;

  int grid_side() const { return input_size / patch_size; }

  void validate() const {
    if (patch_size < 1 || input_size < patch_size || input_size % patch_size != 0) {
      throw ConfigError("input_size (" + std::to_string(input_size) + ") must be a positive multiple of patch_size (" +
                        std::to_string(patch_size) + ")");
    }
    if (depth < 1) throw ConfigError("depth must be >= 1");
    for (int l : tap_layers) {
      if (l < 1 || l > depth) throw ConfigError("tap layer " + std::to_string(l) + " outside [1, depth]");
    }
    for (int d : pyramid_denominators) {
      if (d < 1 || input_size % d != 0) {
        throw ConfigError("input_size must be divisible by every pyramid denominator (1/" + std::to_string(d) + ")");
      }
    }
    if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  }
};

/// Row-major sequence of rows x cols tokens, each `dim` floats.
struct TokenGrid {
  int rows = 0;
  int cols = 0;
  int dim = 0;
  std::vector<float> values;  ///< size rows * cols * dim

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
  std::span<const float> token(std::size_t i) const {
    return {values.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  friend bool operator==(const TokenGrid&, const TokenGrid&) = default;
};

/// rows x cols x channels feature map, channel-last.
struct FeatureMap {
  int rows = 0;
  int cols = 0;
  int channels = 0;
  std::vector<float> values;

  FeatureMap() = default;
  FeatureMap(int r, int c, int ch, float fill = 0.0f)
      : rows(r), cols(c), channels(ch), values(static_cast<std::size_t>(r) * c * ch, fill) {}

  float& at(int r, int c, int ch) { return values[(static_cast<std::size_t>(r) * cols + c) * channels + ch]; }
  float at(int r, int c, int ch) const {
    return values[(static_cast<std::size_t>(r) * cols + c) * channels + ch];
  }
  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

/// Token i (row-major over the patch grid) is the patch's pixels flattened
/// in (row, column, channel) order; dim = patch^2 * channels.
inline TokenGrid patchify(const Raster& img, const EncoderSpec& spec) {
  spec.validate();
  if (img.width != spec.input_size || img.height != spec.input_size) {
    throw ShapeMismatch("patchify: expected a " + std::to_string(spec.input_size) + "x" +
                        std::to_string(spec.input_size) + " image, got " + std::to_string(img.width) + "x" +
                        std::to_string(img.height));
  }
  const int p = spec.patch_size, g = spec.grid_side(), ch = img.channels;
  TokenGrid tg{g, g, p * p * ch, {}};
  tg.values.reserve(tg.size() * tg.dim);
  for (int gr = 0; gr < g; ++gr) {
    for (int gc = 0; gc < g; ++gc) {
      for (int y = 0; y < p; ++y) {
        for (int x = 0; x < p; ++x) {
          for (int c = 0; c < ch; ++c) tg.values.push_back(img.at(gc * p + x, gr * p + y, c));
        }
      }
    }
  }
  return tg;
}

inline Raster unpatchify(const TokenGrid& tg, int patch_size, int channels) {
  if (tg.dim != patch_size * patch_size * channels) throw ShapeMismatch("unpatchify: token dim does not match patch");
  Raster img(tg.cols * patch_size, tg.rows * patch_size, channels);
  std::size_t i = 0;
  for (int gr = 0; gr < tg.rows; ++gr) {
    for (int gc = 0; gc < tg.cols; ++gc) {
      for (int y = 0; y < patch_size; ++y) {
        for (int x = 0; x < patch_size; ++x) {
          for (int c = 0; c < channels; ++c) img.at(gc * patch_size + x, gr * patch_size + y, c) = clamp_u8(tg.values[i++]);
        }
      }
    }
  }
  return img;
}

/// map(r, c) is token r * cols + c.
inline FeatureMap tokens_to_map(const TokenGrid& tg) {
  if (tg.values.size() != tg.size() * static_cast<std::size_t>(tg.dim)) {
    throw ShapeMismatch("tokens_to_map: token count does not match the grid");
  }
  FeatureMap m;
  m.rows = tg.rows;
  m.cols = tg.cols;
  m.channels = tg.dim;
  m.values = tg.values;  // identical memory layout
  return m;
}

inline TokenGrid map_to_tokens(const FeatureMap& m) { return TokenGrid{m.rows, m.cols, m.channels, m.values}; }

/// Nearest-neighbour resampling to rows x cols; for an integer factor k each
/// source cell becomes a k x k block.
inline FeatureMap resize_nearest(const FeatureMap& src, int rows, int cols) {
  FeatureMap out(rows, cols, src.channels);
  for (int r = 0; r < rows; ++r) {
    const int sr = static_cast<int>(static_cast<long>(r) * src.rows / rows);
    for (int c = 0; c < cols; ++c) {
      const int sc = static_cast<int>(static_cast<long>(c) * src.cols / cols);
      std::copy_n(&src.values[(static_cast<std::size_t>(sr) * src.cols + sc) * src.channels], src.channels,
                  &out.values[(static_cast<std::size_t>(r) * cols + c) * src.channels]);
    }
  }
  return out;
}

struct PyramidLevel {
  int denominator;  ///< level resolution is input_size / denominator
  int source_layer;
  FeatureMap map;
};

/// Builds one level per pyramid denominator from the tapped layer maps.
/// The shallowest tap feeds the finest level.
inline std::vector<PyramidLevel> build_pyramid(const std::map<int, FeatureMap>& taps, const EncoderSpec& spec) {
  spec.validate();
  if (taps.size() != spec.pyramid_denominators.size()) {
    throw ConfigError("build_pyramid: expected " + std::to_string(spec.pyramid_denominators.size()) +
                      " tap maps, got " + std::to_string(taps.size()));
  }
  std::vector<int> denoms = spec.pyramid_denominators;
  std::sort(denoms.begin(), denoms.end());
  const int g = spec.grid_side();
  std::vector<PyramidLevel> out;
  auto level = denoms.begin();
  for (const auto& [layer, map] : taps) {  // ascending layer order
    if (map.rows != g || map.cols != g) {
      throw ShapeMismatch("build_pyramid: tap " + std::to_string(layer) + " is " + std::to_string(map.rows) + "x" +
                          std::to_string(map.cols) + ", expected the " + std::to_string(g) + "x" +
                          std::to_string(g) + " token grid");
    }
    const int side = spec.input_size / *level;
    out.push_back({*level, layer, resize_nearest(map, side, side)});
    ++level;
  }
  return out;
}

struct MaeSplit {
  int rows = 0;
  int cols = 0;
  int dim = 0;
  std::vector<float> visible_tokens;          ///< |visible| x dim, original relative order
  std::vector<std::size_t> visible_indices;   ///< ascending
  std::vector<std::size_t> masked_indices;    ///< ascending
};

inline std::size_t mae_masked_count(std::size_t n, double ratio) {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
}

/// Masks round(ratio * N) tokens chosen by a seeded uniform shuffle.
inline MaeSplit mae_mask(const TokenGrid& tg, double ratio, std::uint64_t seed) {
  if (!(ratio > 0 && ratio < 1)) throw ConfigError("mae_mask: ratio must lie in (0, 1)");
  const std::size_t n = tg.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterRng rng(seed, 0x6d6165);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  const std::size_t k = mae_masked_count(n, ratio);
  MaeSplit s{tg.rows, tg.cols, tg.dim, {}, {}, {}};
  s.masked_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
  s.visible_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(k), perm.end());
  std::sort(s.masked_indices.begin(), s.masked_indices.end());
  std::sort(s.visible_indices.begin(), s.visible_indices.end());
  for (auto i : s.visible_indices) {
    auto t = tg.token(i);
    s.visible_tokens.insert(s.visible_tokens.end(), t.begin(), t.end());
  }
  return s;
}

namespace detail {

inline void check_partition(const MaeSplit& s) {
  const std::size_t n = static_cast<std::size_t>(s.rows) * s.cols;
  std::vector<int> seen(n, 0);
  for (const auto* list : {&s.visible_indices, &s.masked_indices}) {
    for (auto i : *list) {
      if (i >= n) throw MalformedPartition("index " + std::to_string(i) + " outside [0, " + std::to_string(n) + ")");
      if (seen[i]++) throw MalformedPartition("index " + std::to_string(i) + " listed twice");
    }
  }
  if (s.visible_indices.size() + s.masked_indices.size() != n) {
    throw MalformedPartition("index lists do not cover all " + std::to_string(n) + " tokens");
  }
  if (s.visible_tokens.size() != s.visible_indices.size() * static_cast<std::size_t>(s.dim)) {
    throw MalformedPartition("visible token count does not match the visible index list");
  }
}

}  // namespace detail

/// Reassembles the full sequence. `fill` is either one token (used at every
/// masked slot) or one token per masked index, in masked-list order.
inline TokenGrid mae_restore(const MaeSplit& s, std::span<const float> fill) {
  detail::check_partition(s);
  const std::size_t dim = static_cast<std::size_t>(s.dim);
  const bool per_slot = fill.size() == s.masked_indices.size() * dim && !s.masked_indices.empty();
  if (!per_slot && fill.size() != dim) {
    throw ShapeMismatch("mae_restore: fill must be one token or one token per masked slot");
  }
  TokenGrid out{s.rows, s.cols, s.dim, std::vector<float>(static_cast<std::size_t>(s.rows) * s.cols * dim)};
  for (std::size_t v = 0; v < s.visible_indices.size(); ++v) {
    std::copy_n(s.visible_tokens.begin() + static_cast<std::ptrdiff_t>(v * dim), dim,
                out.values.begin() + static_cast<std::ptrdiff_t>(s.visible_indices[v] * dim));
  }
  for (std::size_t m = 0; m < s.masked_indices.size(); ++m) {
    const std::size_t src = per_slot ? m * dim : 0;
    std::copy_n(fill.begin() + static_cast<std::ptrdiff_t>(src), dim,
                out.values.begin() + static_cast<std::ptrdiff_t>(s.masked_indices[m] * dim));
  }
  return out;
}

struct GeometryCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Shape and round-trip self-test of the encoder geometry for `spec`,
/// including the MAE split at `mask_ratio`.
inline std::vector<GeometryCheck> run_geometry_check(const EncoderSpec& spec = {}, double mask_ratio = 0.75,
                                                     std::uint64_t seed = 0) {
  std::vector<GeometryCheck> out;
  auto check = [&](std::string name, bool ok, std::string detail) {
    out.push_back({std::move(name), ok, std::move(detail)});
  };
  spec.validate();
  const int g = spec.grid_side();
  const std::size_t n = static_cast<std::size_t>(g) * g;

  Raster img(spec.input_size, spec.input_size, 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>((x * 7 + y * 13 + c * 71) % 251);
    }
  }
  const TokenGrid tg = patchify(img, spec);
  check("token grid", tg.rows == g && tg.cols == g && tg.size() == n,
        std::to_string(spec.input_size) + "/" + std::to_string(spec.patch_size) + " -> " + std::to_string(tg.size()) +
            " tokens on " + std::to_string(tg.rows) + "x" + std::to_string(tg.cols));
  check("patchify round trip", unpatchify(tg, spec.patch_size, 3) == img, "unpatchify(patchify(img)) == img");

  const FeatureMap fm = tokens_to_map(tg);
  bool cell_ok = true;
  for (std::size_t i = 0; i < n && cell_ok; ++i) {
    const int r = static_cast<int>(i) / g, c = static_cast<int>(i) % g;
    cell_ok = fm.at(r, c, 0) == tg.token(i)[0];
  }
  check("token map layout", cell_ok && fm.rows == g && fm.cols == g, "map(r, c) == token r*cols + c");
  check("token map round trip", map_to_tokens(fm) == tg, "map -> tokens -> map is the identity");

  std::map<int, FeatureMap> taps;
  for (std::size_t t = 0; t < spec.tap_layers.size() && t < spec.pyramid_denominators.size(); ++t) {
    taps[spec.tap_layers[t]] = FeatureMap(g, g, spec.embed_dim, static_cast<float>(t + 1));
  }
  const auto pyramid = build_pyramid(taps, spec);
  std::string shapes;
  bool shapes_ok = pyramid.size() == spec.pyramid_denominators.size();
  for (const auto& lv : pyramid) {
    const int side = spec.input_size / lv.denominator;
    shapes_ok = shapes_ok && lv.map.rows == side && lv.map.cols == side && lv.map.channels == spec.embed_dim;
    shapes += (shapes.empty() ? "" : " / ") + std::to_string(lv.map.rows) + "x" + std::to_string(lv.map.cols) +
              " (1/" + std::to_string(lv.denominator) + ", layer " + std::to_string(lv.source_layer) + ")";
  }
  check("pyramid shapes", shapes_ok, shapes);

  const MaeSplit split = mae_mask(tg, mask_ratio, seed);
  const std::size_t k = mae_masked_count(n, mask_ratio);
  check("mae mask count", split.masked_indices.size() == k && split.visible_indices.size() == n - k,
        "ratio " + std::to_string(mask_ratio) + " masks " + std::to_string(split.masked_indices.size()) + " of " +
            std::to_string(n));
  std::vector<float> originals;
  for (auto i : split.masked_indices) {
    auto t = tg.token(i);
    originals.insert(originals.end(), t.begin(), t.end());
  }
  check("mae restore round trip", mae_restore(split, originals) == tg,
        "restore with the original masked tokens reproduces the input");
  const MaeSplit again = mae_mask(tg, mask_ratio, seed);
  check("mae determinism", again.masked_indices == split.masked_indices, "same seed -> same partition");
  return out;
}

}  // namespace planksynth
