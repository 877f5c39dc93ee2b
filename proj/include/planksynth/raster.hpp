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

// Pixel-level primitives: the Raster type, Gaussian blur, geometric
// transforms for cutouts, and mask-aware compositing.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "planksynth/errors.hpp"
#include "planksynth/mask.hpp"

namespace planksynth {

/// Row-major 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Raster() = default;
  Raster(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 1 || h < 1) throw ConfigError("raster dimensions must be at least 1x1");
    if (c != 1 && c != 3) throw ConfigError("raster must have 1 or 3 channels");
  }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  std::uint8_t& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  double mean() const {
    double s = 0;
    for (auto v : data) s += v;
    return data.empty() ? 0.0 : s / static_cast<double>(data.size());
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

/// Gray -> RGB replicates; RGB -> gray uses integer Rec.601 luma.
inline Raster convert_channels(const Raster& img, int channels) {
  if (img.channels == channels) return img;
  Raster out(img.width, img.height, channels);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (channels == 3) {
    for (std::size_t i = 0; i < n; ++i) {
      out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = img.data[i];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned r = img.data[3 * i], g = img.data[3 * i + 1], b = img.data[3 * i + 2];
      out.data[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
    }
  }
  return out;
}

inline Raster flip(const Raster& img, bool horizontal, bool vertical) {
  if (!horizontal && !vertical) return img;
  Raster out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y) {
    const int sy = vertical ? img.height - 1 - y : y;
    for (int x = 0; x < img.width; ++x) {
      const int sx = horizontal ? img.width - 1 - x : x;
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

/// Bilinear resize with pixel-center alignment and edge clamping.
inline Raster resize_bilinear(const Raster& img, int width, int height) {
  if (img.width == width && img.height == height) return img;
  Raster out(width, height, img.channels);
  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(x0, y0, c) * (1 - wx) + img.at(x1, y0, c) * wx;
        const double bot = img.at(x0, y1, c) * (1 - wx) + img.at(x1, y1, c) * wx;
        out.at(x, y, c) = clamp_u8(top * (1 - wy) + bot * wy);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian blur

/// Normalized 1-D kernel of radius ceil(3 sigma); element i is offset i - radius.
inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace detail {

/// Symmetric reflection (edge sample repeated), folded for any offset.
inline int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

enum class BlurOrder { RowsFirst, ColumnsFirst };

inline Raster gaussian_blur_ordered(const Raster& img, double sigma, BlurOrder order) {
  if (sigma < 0) throw ConfigError("gaussian_blur: sigma must be >= 0");
  if (sigma == 0) return img;
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = img.width, h = img.height, ch = img.channels;

  std::vector<float> a(img.data.begin(), img.data.end());
  std::vector<float> b(a.size());
  std::vector<float> kf(kernel.begin(), kernel.end());

  auto pass_rows = [&](const std::vector<float>& src, std::vector<float>& dst) {
    std::vector<int> idx(w + 2 * radius);
    for (int i = 0; i < static_cast<int>(idx.size()); ++i) idx[i] = reflect_index(i - radius, w);
    for (int y = 0; y < h; ++y) {
      const float* row = src.data() + static_cast<std::size_t>(y) * w * ch;
      float* out = dst.data() + static_cast<std::size_t>(y) * w * ch;
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < ch; ++c) {
          float acc = 0;
          for (int k = 0; k <= 2 * radius; ++k) acc += kf[k] * row[idx[x + k] * ch + c];
          out[x * ch + c] = acc;
        }
      }
    }
  };
  auto pass_cols = [&](const std::vector<float>& src, std::vector<float>& dst) {
    const std::size_t stride = static_cast<std::size_t>(w) * ch;
    std::fill(dst.begin(), dst.end(), 0.0f);
    for (int y = 0; y < h; ++y) {
      float* out = dst.data() + y * stride;
      for (int k = 0; k <= 2 * radius; ++k) {
        const float* in = src.data() + reflect_index(y + k - radius, h) * stride;
        const float wk = kf[k];
        for (std::size_t i = 0; i < stride; ++i) out[i] += wk * in[i];
      }
    }
  };

  if (order == BlurOrder::RowsFirst) {
    pass_rows(a, b);
    pass_cols(b, a);
  } else {
    pass_cols(a, b);
    pass_rows(b, a);
  }
  Raster out(w, h, ch);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = clamp_u8(a[i]);
  return out;
}

}  // namespace detail

/// Separable Gaussian blur with symmetric-reflect borders. sigma == 0 is
/// the identity.
inline Raster gaussian_blur(const Raster& img, double sigma) {
  return detail::gaussian_blur_ordered(img, sigma, detail::BlurOrder::RowsFirst);
}

// ---------------------------------------------------------------------------
// Geometric transform of a cutout

struct AffineParams {
  bool flip_h = false;
  bool flip_v = false;
  double angle = 0.0;  ///< degrees, counter-clockwise as displayed
  double scale = 1.0;
};

/// Result of transforming a cutout: the expanded canvas and its mask.
struct TransformedCutout {
  Raster image;
  Bitmap mask;
};

namespace detail {

struct Rotation {
  double cos_a;
  double sin_a;
};

inline Rotation rotation_for(double degrees) {
  double a = std::fmod(degrees, 360.0);
  if (a < 0) a += 360.0;
  // Exact values for right angles keep those rotations pure permutations.
  if (a == 0.0) return {1, 0};
  if (a == 90.0) return {0, 1};
  if (a == 180.0) return {-1, 0};
  if (a == 270.0) return {0, -1};
  const double r = a * 3.14159265358979323846 / 180.0;
  return {std::cos(r), std::sin(r)};
}

struct WarpGeometry {
  int out_w;
  int out_h;
  Rotation rot;
  double scale;
  int src_w;
  int src_h;
  bool flip_h;
  bool flip_v;

  // Maps the center of output pixel (u, v) to continuous source coordinates.
  void source_of(int u, int v, double& sx, double& sy) const {
    const double qx = (u + 0.5 - out_w / 2.0) / scale;
    const double qy = (v + 0.5 - out_h / 2.0) / scale;
    double x = rot.cos_a * qx - rot.sin_a * qy;
    double y = rot.sin_a * qx + rot.cos_a * qy;
    if (flip_h) x = -x;
    if (flip_v) y = -y;
    sx = x + src_w / 2.0;
    sy = y + src_h / 2.0;
  }
};

inline WarpGeometry warp_geometry(int w, int h, const AffineParams& p) {
  if (!(p.scale > 0)) throw ConfigError("affine_transform: scale must be > 0");
  const Rotation rot = rotation_for(p.angle);
  const double ext_x = p.scale * (std::abs(rot.cos_a) * w + std::abs(rot.sin_a) * h);
  const double ext_y = p.scale * (std::abs(rot.sin_a) * w + std::abs(rot.cos_a) * h);
  const int out_w = std::max(1, static_cast<int>(std::ceil(ext_x - 1e-9)));
  const int out_h = std::max(1, static_cast<int>(std::ceil(ext_y - 1e-9)));
  return {out_w, out_h, rot, p.scale, w, h, p.flip_h, p.flip_v};
}

/// Nearest-neighbour warp of a mask only; used to size placements.
inline Bitmap warp_mask(const Bitmap& mask, const AffineParams& p) {
  const auto g = warp_geometry(mask.width, mask.height, p);
  Bitmap out(g.out_w, g.out_h);
  for (int v = 0; v < g.out_h; ++v) {
    for (int u = 0; u < g.out_w; ++u) {
      double sx, sy;
      g.source_of(u, v, sx, sy);
      const int ix = static_cast<int>(std::floor(sx));
      const int iy = static_cast<int>(std::floor(sy));
      if (ix >= 0 && iy >= 0 && ix < mask.width && iy < mask.height) {
        out.at(u, v) = mask.at(ix, iy);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Flip, rotate about the centre, then scale. The output canvas is the
/// tight box of the transformed frame, so nothing is clipped. The image is
/// sampled bilinearly and the mask by nearest neighbour.
///
/// Throws DegenerateTransform when the mask has no pixels left.
inline TransformedCutout transform_cutout(const Raster& img, const Bitmap& mask,
                                          const AffineParams& p) {
  if (img.width != mask.width || img.height != mask.height) {
    throw ShapeMismatch("affine_transform: image and mask frames differ");
  }
  const auto g = detail::warp_geometry(img.width, img.height, p);
  TransformedCutout out{Raster(g.out_w, g.out_h, img.channels), Bitmap(g.out_w, g.out_h)};
  std::uint64_t area = 0;
  const int ch = img.channels;
  for (int v = 0; v < g.out_h; ++v) {
    for (int u = 0; u < g.out_w; ++u) {
      double sx, sy;
      g.source_of(u, v, sx, sy);
      if (sx < 0 || sy < 0 || sx >= img.width || sy >= img.height) continue;
      const int ix = static_cast<int>(sx), iy = static_cast<int>(sy);
      if (mask.at(ix, iy)) {
        out.mask.at(u, v) = 1;
        ++area;
      }
      const double fx = sx - 0.5, fy = sy - 0.5;
      const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
      const double wx = fx - x0, wy = fy - y0;
      const int xa = std::clamp(x0, 0, img.width - 1), xb = std::clamp(x0 + 1, 0, img.width - 1);
      const int ya = std::clamp(y0, 0, img.height - 1), yb = std::clamp(y0 + 1, 0, img.height - 1);
      for (int c = 0; c < ch; ++c) {
        const double top = img.at(xa, ya, c) * (1 - wx) + img.at(xb, ya, c) * wx;
        const double bot = img.at(xa, yb, c) * (1 - wx) + img.at(xb, yb, c) * wx;
        out.image.at(u, v, c) = clamp_u8(top * (1 - wy) + bot * wy);
      }
    }
  }
  if (area == 0) throw DegenerateTransform("transform leaves an empty mask (scale " +
                                           std::to_string(p.scale) + ")");
  return out;
}

struct TransformedInstance {
  Raster image;
  InstanceMask mask;
};

/// Mask-typed form of transform_cutout.
inline TransformedInstance affine_transform(const Raster& img, const InstanceMask& mask,
                                            const AffineParams& p) {
  auto t = transform_cutout(img, rle_decode(mask), p);
  return {std::move(t.image), rle_encode(t.mask)};
}

// ---------------------------------------------------------------------------
// Compositing

struct Offset {
  int x = 0;
  int y = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

struct CompositeResult {
  Raster image;
  std::uint64_t pasted = 0;      ///< base pixels overwritten
  bool fully_truncated = false;  ///< fg frame lies entirely outside base
};

/// In-place hard paste. Returns the number of base pixels overwritten.
inline std::uint64_t composite_into(Raster& base, const Raster& fg, const Bitmap& fg_mask,
                                    Offset offset) {
  if (fg.width != fg_mask.width || fg.height != fg_mask.height) {
    throw ShapeMismatch("composite: foreground and mask frames differ");
  }
  if (fg.channels != base.channels) {
    throw ShapeMismatch("composite: channel count mismatch");
  }
  const BBox span = intersect(BBox{offset.x, offset.y, fg.width, fg.height},
                              BBox{0, 0, base.width, base.height});
  std::uint64_t pasted = 0;
  const int ch = base.channels;
  for (int y = span.y; y < span.y + span.h; ++y) {
    for (int x = span.x; x < span.x + span.w; ++x) {
      const int fx = x - offset.x, fy = y - offset.y;
      if (!fg_mask.at(fx, fy)) continue;
      for (int c = 0; c < ch; ++c) base.at(x, y, c) = fg.at(fx, fy, c);
      ++pasted;
    }
  }
  return pasted;
}

inline CompositeResult composite(const Raster& base, const Raster& fg, const InstanceMask& fg_mask,
                                 Offset offset) {
  CompositeResult r{base, 0, false};
  if (intersect(BBox{offset.x, offset.y, fg.width, fg.height},
                BBox{0, 0, base.width, base.height})
          .empty()) {
    r.fully_truncated = true;
    return r;
  }
  r.pasted = composite_into(r.image, fg, rle_decode(fg_mask), offset);
  return r;
}

}  // namespace planksynth
