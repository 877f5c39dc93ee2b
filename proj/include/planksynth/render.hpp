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

// Overlay rendering of instance masks for visual inspection.

#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "planksynth/dataset_io.hpp"
#include "planksynth/errors.hpp"
#include "planksynth/mask.hpp"
#include "planksynth/raster.hpp"
#include "planksynth/rng.hpp"

namespace planksynth {

using Rgb = std::array<std::uint8_t, 3>;

/// 64 fixed colours: hues spread by the golden angle at alternating
/// saturation/value so neighbouring entries stay distinguishable.
inline const std::array<Rgb, 64>& palette_table() {
  static const std::array<Rgb, 64> table = [] {
    std::array<Rgb, 64> t{};
    for (int i = 0; i < 64; ++i) {
      const double h = std::fmod(i * 137.508, 360.0) / 60.0;
      const double s = (i % 2 == 0) ? 0.85 : 0.6;
      const double v = (i % 3 == 0) ? 0.95 : 0.8;
      const double c = v * s;
      const double x = c * (1 - std::abs(std::fmod(h, 2.0) - 1));
      double r = 0, g = 0, b = 0;
      switch (static_cast<int>(h)) {
        case 0: r = c, g = x; break;
        case 1: r = x, g = c; break;
        case 2: g = c, b = x; break;
        case 3: g = x, b = c; break;
        case 4: r = x, b = c; break;
        default: r = c, b = x; break;
      }
      const double m = v - c;
      t[i] = {clamp_u8((r + m) * 255), clamp_u8((g + m) * 255), clamp_u8((b + m) * 255)};
    }
    return t;
  }();
  return table;
}

inline Rgb palette_color(std::int64_t category_id) {
  return palette_table()[splitmix64(static_cast<std::uint64_t>(category_id)) % 64];
}

struct OverlayStyle {
  double alpha = 0.4;
  bool draw_contours = true;
  bool draw_labels = true;

  void validate() const {
    if (!(alpha >= 0 && alpha <= 1)) throw ConfigError("overlay alpha must be in [0, 1]");
  }
};

/// One thing to draw: a mask plus its caption.
struct OverlayItem {
  InstanceMask mask;
  std::int64_t category_id = 0;
  std::string label;  ///< empty for no caption
};

inline std::vector<OverlayItem> overlay_items(const AnnotationSet& set, std::int64_t image_id) {
  std::map<std::int64_t, std::string> names;
  for (const auto& c : set.categories) names[c.id] = c.name;
  std::vector<OverlayItem> out;
  for (const auto& a : set.annotations) {
    if (a.image_id != image_id) continue;
    out.push_back({InstanceMask::from_rle(a.segmentation), a.category_id,
                   names.count(a.category_id) ? names[a.category_id] : std::to_string(a.category_id)});
  }
  return out;
}

inline std::vector<OverlayItem> overlay_items(const DetectionSet& set, const AnnotationSet& gt, std::int64_t image_id) {
  std::map<std::int64_t, std::string> names;
  for (const auto& c : gt.categories) names[c.id] = c.name;
  std::vector<OverlayItem> out;
  for (const auto& d : set.detections) {
    if (d.image_id != image_id) continue;
    char score[16];
    std::snprintf(score, sizeof score, " %.2f", d.score);
    const std::string name = names.count(d.category_id) ? names[d.category_id] : std::to_string(d.category_id);
    out.push_back({InstanceMask::from_rle(d.segmentation), d.category_id, name + score});
  }
  return out;
}

namespace detail {

// 3x5 glyphs, one row per 3 bits (MSB = left column).
inline std::array<std::uint8_t, 5> glyph(char ch) {
  switch (std::toupper(static_cast<unsigned char>(ch))) {
    case '0': return {7, 5, 5, 5, 7};
    case '1': return {2, 6, 2, 2, 7};
    case '2': return {7, 1, 7, 4, 7};
    case '3': return {7, 1, 3, 1, 7};
    case '4': return {5, 5, 7, 1, 1};
    case '5': return {7, 4, 7, 1, 7};
    case '6': return {7, 4, 7, 5, 7};
    case '7': return {7, 1, 2, 2, 2};
    case '8': return {7, 5, 7, 5, 7};
    case '9': return {7, 5, 7, 1, 7};
    case 'A': return {2, 5, 7, 5, 5};
    case 'B': return {6, 5, 6, 5, 6};
    case 'C': return {3, 4, 4, 4, 3};
    case 'D': return {6, 5, 5, 5, 6};
    case 'E': return {7, 4, 6, 4, 7};
    case 'F': return {7, 4, 6, 4, 4};
    case 'G': return {3, 4, 5, 5, 3};
    case 'H': return {5, 5, 7, 5, 5};
    case 'I': return {7, 2, 2, 2, 7};
    case 'J': return {1, 1, 1, 5, 2};
    case 'K': return {5, 5, 6, 5, 5};
    case 'L': return {4, 4, 4, 4, 7};
    case 'M': return {5, 7, 7, 5, 5};
    case 'N': return {6, 5, 5, 5, 5};
    case 'O': return {2, 5, 5, 5, 2};
    case 'P': return {6, 5, 6, 4, 4};
    case 'Q': return {2, 5, 5, 6, 3};
    case 'R': return {6, 5, 6, 5, 5};
    case 'S': return {3, 4, 2, 1, 6};
    case 'T': return {7, 2, 2, 2, 2};
    case 'U': return {5, 5, 5, 5, 7};
    case 'V': return {5, 5, 5, 5, 2};
    case 'W': return {5, 5, 7, 7, 5};
    case 'X': return {5, 5, 2, 5, 5};
    case 'Y': return {5, 5, 2, 2, 2};
    case 'Z': return {7, 1, 2, 4, 7};
    case '.': return {0, 0, 0, 0, 2};
    case '-': return {0, 0, 7, 0, 0};
    case '_': return {0, 0, 0, 0, 7};
    case ':': return {0, 2, 0, 2, 0};
    default: return {0, 0, 0, 0, 0};
  }
}

inline void put_pixel(Raster& img, int x, int y, const Rgb& color) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  if (img.channels == 3) {
    for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
  } else {
    img.at(x, y) = static_cast<std::uint8_t>((299 * color[0] + 587 * color[1] + 114 * color[2] + 500) / 1000);
  }
}

/// Text at 2x scale on a filled backing box.
inline void draw_text(Raster& img, int x, int y, const std::string& text, const Rgb& box, const Rgb& ink) {
  constexpr int scale = 2, advance = 4 * scale;
  const int w = static_cast<int>(text.size()) * advance + scale, h = 5 * scale + 2 * scale;
  for (int yy = 0; yy < h; ++yy) {
    for (int xx = 0; xx < w; ++xx) put_pixel(img, x + xx, y + yy, box);
  }
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto g = glyph(text[i]);
    for (int row = 0; row < 5; ++row) {
      for (int col = 0; col < 3; ++col) {
        if (!((g[row] >> (2 - col)) & 1)) continue;
        for (int sy = 0; sy < scale; ++sy) {
          for (int sx = 0; sx < scale; ++sx) {
            put_pixel(img, x + scale + static_cast<int>(i) * advance + col * scale + sx, y + scale + row * scale + sy, ink);
          }
        }
      }
    }
  }
}

}  // namespace detail

/// Blends each mask with its category colour, then optionally outlines it
/// and writes its caption above the box. The input raster is not modified.
inline Raster render_overlay(const Raster& img, const std::vector<OverlayItem>& items, const OverlayStyle& style = {}) {
  style.validate();
  Raster out = img;
  for (const auto& item : items) {
    if (item.mask.width() != img.width || item.mask.height() != img.height) {
      throw ShapeMismatch("render_overlay: mask frame differs from the image");
    }
  }
  for (const auto& item : items) {
    if (item.mask.empty() || style.alpha == 0.0) continue;
    const Rgb color = palette_color(item.category_id);
    const std::uint8_t gray =
        static_cast<std::uint8_t>((299 * color[0] + 587 * color[1] + 114 * color[2] + 500) / 1000);
    const BBox& bb = item.mask.bbox();
    const Bitmap local = decode_window(item.mask, bb);
    for (int y = 0; y < bb.h; ++y) {
      for (int x = 0; x < bb.w; ++x) {
        if (!local.at(x, y)) continue;
        for (int c = 0; c < out.channels; ++c) {
          const double target = out.channels == 3 ? color[c] : gray;
          auto& v = out.at(bb.x + x, bb.y + y, c);
          v = clamp_u8((1.0 - style.alpha) * v + style.alpha * target);
        }
      }
    }
  }
  for (const auto& item : items) {
    if (item.mask.empty()) continue;
    const Rgb color = palette_color(item.category_id);
    const BBox& bb = item.mask.bbox();
    if (style.draw_contours) {
      const Bitmap local = decode_window(item.mask, bb);
      auto set = [&](int x, int y) { return x >= 0 && y >= 0 && x < bb.w && y < bb.h && local.at(x, y); };
      for (int y = 0; y < bb.h; ++y) {
        for (int x = 0; x < bb.w; ++x) {
          if (set(x, y) && (!set(x - 1, y) || !set(x + 1, y) || !set(x, y - 1) || !set(x, y + 1))) {
            detail::put_pixel(out, bb.x + x, bb.y + y, color);
          }
        }
      }
    }
    if (style.draw_labels && !item.label.empty()) {
      detail::draw_text(out, bb.x, std::max(0, bb.y - 14), item.label, color, Rgb{255, 255, 255});
    }
  }
  return out;
}

}  // namespace planksynth
