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

// Binary instance masks and their run-length encoding.
//
// Runs are taken in column-major order and the first run always counts
// zeros (it may be 0 only as the very first entry). Every other run is
// strictly positive, so each bitmap has exactly one encoding.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "planksynth/errors.hpp"

namespace planksynth {

/// Axis-aligned pixel rectangle; (x, y) is the top-left corner.
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool empty() const { return w <= 0 || h <= 0; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

inline BBox intersect(const BBox& a, const BBox& b) {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.x + a.w, b.x + b.w);
  const int y1 = std::min(a.y + a.h, b.y + b.h);
  if (x1 <= x0 || y1 <= y0) return {};
  return {x0, y0, x1 - x0, y1 - y0};
}

inline BBox bounding_union(const BBox& a, const BBox& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  const int x0 = std::min(a.x, b.x);
  const int y0 = std::min(a.y, b.y);
  const int x1 = std::max(a.x + a.w, b.x + b.w);
  const int y1 = std::max(a.y + a.h, b.y + b.h);
  return {x0, y0, x1 - x0, y1 - y0};
}

/// Row-major binary grid, one byte per pixel (0 or 1).
struct Bitmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Bitmap() = default;
  Bitmap(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {
    if (w < 1 || h < 1) throw ConfigError("bitmap dimensions must be at least 1x1");
  }

  std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }

  std::uint64_t count() const {
    return static_cast<std::uint64_t>(std::count_if(bits.begin(), bits.end(),
                                                    [](std::uint8_t b) { return b != 0; }));
  }

  friend bool operator==(const Bitmap&, const Bitmap&) = default;
};

/// Raw COCO-style uncompressed RLE as it appears in a manifest. May be
/// malformed; `InstanceMask` is the validated form.
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const Rle&, const Rle&) = default;
};

/// Returns a description of the first structural defect, or nullopt.
inline std::optional<std::string> rle_defect(const Rle& rle) {
  if (rle.height < 1 || rle.width < 1) return "frame size must be at least 1x1";
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    if (i > 0 && rle.counts[i] == 0) {
      return "zero-length run at position " + std::to_string(i);
    }
    total += rle.counts[i];
  }
  const std::uint64_t expected = static_cast<std::uint64_t>(rle.height) * rle.width;
  if (rle.counts.empty() || total != expected) {
    return "runs sum to " + std::to_string(total) + ", expected " + std::to_string(expected);
  }
  return std::nullopt;
}

/// Validated instance mask: RLE plus the bounding box and area derived
/// from it. The derived fields are always consistent with the runs.
class InstanceMask {
 public:
  InstanceMask() = default;

  /// Throws MalformedMask when the runs do not describe the frame.
  static InstanceMask from_rle(Rle rle) {
    if (auto defect = rle_defect(rle)) throw MalformedMask("malformed RLE: " + *defect);
    InstanceMask m;
    m.rle_ = std::move(rle);
    m.recompute();
    return m;
  }

  int width() const { return rle_.width; }
  int height() const { return rle_.height; }
  const Rle& rle() const { return rle_; }
  const std::vector<std::uint32_t>& counts() const { return rle_.counts; }
  const BBox& bbox() const { return bbox_; }
  std::uint64_t area() const { return area_; }
  bool empty() const { return area_ == 0; }

  friend bool operator==(const InstanceMask& a, const InstanceMask& b) { return a.rle_ == b.rle_; }

 private:
  void recompute() {
    const std::uint64_t h = static_cast<std::uint64_t>(rle_.height);
    std::uint64_t pos = 0;
    std::uint64_t min_c = UINT64_MAX, max_c = 0, min_r = UINT64_MAX, max_r = 0;
    area_ = 0;
    for (std::size_t i = 0; i < rle_.counts.size(); ++i) {
      const std::uint64_t n = rle_.counts[i];
      if (i % 2 == 1 && n > 0) {
        const std::uint64_t first = pos, last = pos + n - 1;
        const std::uint64_t c0 = first / h, c1 = last / h;
        min_c = std::min(min_c, c0);
        max_c = std::max(max_c, c1);
        if (c0 == c1) {
          min_r = std::min(min_r, first % h);
          max_r = std::max(max_r, last % h);
        } else {
          min_r = 0;
          max_r = h - 1;
        }
        area_ += n;
      }
      pos += n;
    }
    if (area_ == 0) {
      bbox_ = {};
    } else {
      bbox_ = {static_cast<int>(min_c), static_cast<int>(min_r),
               static_cast<int>(max_c - min_c + 1), static_cast<int>(max_r - min_r + 1)};
    }
  }

  Rle rle_;
  BBox bbox_;
  std::uint64_t area_ = 0;
};

/// Accumulates column-major pixel runs into a canonical RLE.
class RleBuilder {
 public:
  RleBuilder(int width, int height) : width_(width), height_(height) {}

  void push(bool value, std::uint64_t n) {
    if (n == 0) return;
    if (value != current_) {
      counts_.push_back(static_cast<std::uint32_t>(run_));
      run_ = 0;
      current_ = value;
    }
    run_ += n;
  }

  InstanceMask finish() && {
    counts_.push_back(static_cast<std::uint32_t>(run_));
    return InstanceMask::from_rle(Rle{height_, width_, std::move(counts_)});
  }

 private:
  int width_;
  int height_;
  std::vector<std::uint32_t> counts_;
  std::uint64_t run_ = 0;
  bool current_ = false;
};

inline InstanceMask rle_encode(const Bitmap& bitmap) {
  if (bitmap.width < 1 || bitmap.height < 1) throw ConfigError("bitmap dimensions must be at least 1x1");
  RleBuilder b(bitmap.width, bitmap.height);
  for (int x = 0; x < bitmap.width; ++x) {
    for (int y = 0; y < bitmap.height; ++y) b.push(bitmap.at(x, y) != 0, 1);
  }
  return std::move(b).finish();
}

/// Decodes only the pixels inside `window` (clipped to the frame). The
/// result is window-sized; pixel (0, 0) is frame pixel (window.x, window.y).
inline Bitmap decode_window(const InstanceMask& mask, BBox window) {
  window = intersect(window, BBox{0, 0, mask.width(), mask.height()});
  if (window.empty()) return {};
  Bitmap out(window.w, window.h);
  const std::uint64_t h = static_cast<std::uint64_t>(mask.height());
  std::uint64_t pos = 0;
  const auto& counts = mask.counts();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::uint64_t n = counts[i];
    if (i % 2 == 1) {
      const std::uint64_t end = pos + n;
      const std::uint64_t c_first = std::max<std::uint64_t>(pos / h, window.x);
      const std::uint64_t c_last = std::min<std::uint64_t>((end - 1) / h, window.x + window.w - 1);
      for (std::uint64_t c = c_first; c <= c_last && c_first <= c_last; ++c) {
        const std::uint64_t col_start = c * h;
        const std::uint64_t r0 = std::max(pos, col_start) - col_start;
        const std::uint64_t r1 = std::min(end, col_start + h) - col_start;  // exclusive
        const std::uint64_t y0 = std::max<std::uint64_t>(r0, window.y);
        const std::uint64_t y1 = std::min<std::uint64_t>(r1, window.y + window.h);
        for (std::uint64_t r = y0; r < y1; ++r) {
          out.at(static_cast<int>(c) - window.x, static_cast<int>(r) - window.y) = 1;
        }
      }
    }
    pos += n;
  }
  return out;
}

inline Bitmap rle_decode(const InstanceMask& mask) {
  return decode_window(mask, BBox{0, 0, mask.width(), mask.height()});
}

/// Throws MalformedMask when the runs do not sum to height x width.
inline Bitmap rle_decode(const Rle& rle) { return rle_decode(InstanceMask::from_rle(rle)); }

/// Places `local` with its top-left at (ox, oy) in a frame_w x frame_h frame.
/// Pixels falling outside the frame are dropped.
inline InstanceMask embed(const Bitmap& local, int ox, int oy, int frame_w, int frame_h) {
  RleBuilder b(frame_w, frame_h);
  const int y0 = std::max(0, oy), y1 = std::min(frame_h, oy + local.height);
  for (int x = 0; x < frame_w; ++x) {
    const int lx = x - ox;
    if (lx < 0 || lx >= local.width || y1 <= y0) {
      b.push(false, static_cast<std::uint64_t>(frame_h));
      continue;
    }
    b.push(false, static_cast<std::uint64_t>(y0));
    for (int y = y0; y < y1; ++y) b.push(local.at(lx, y - oy) != 0, 1);
    b.push(false, static_cast<std::uint64_t>(frame_h - y1));
  }
  return std::move(b).finish();
}

/// Re-expresses `mask` in a new frame where old pixel (x, y) lands at
/// (x + dx, y + dy). Pixels leaving the new frame are dropped.
inline InstanceMask reframe(const InstanceMask& mask, int dx, int dy, int frame_w, int frame_h) {
  if (mask.empty()) return embed(Bitmap{}, 0, 0, frame_w, frame_h);
  const BBox& bb = mask.bbox();
  return embed(decode_window(mask, bb), bb.x + dx, bb.y + dy, frame_w, frame_h);
}

namespace detail {

/// Walks two RLEs of the same frame in lockstep, calling f(a_bit, b_bit, n)
/// for each maximal span where both bits are constant.
template <typename F>
void zip_runs(const InstanceMask& a, const InstanceMask& b, F&& f) {
  const auto& ca = a.counts();
  const auto& cb = b.counts();
  std::size_t ia = 0, ib = 0;
  std::uint64_t ra = ca.empty() ? 0 : ca[0], rb = cb.empty() ? 0 : cb[0];
  while (ia < ca.size() && ib < cb.size()) {
    if (ra == 0) {
      if (++ia < ca.size()) ra = ca[ia];
      continue;
    }
    if (rb == 0) {
      if (++ib < cb.size()) rb = cb[ib];
      continue;
    }
    const std::uint64_t n = std::min(ra, rb);
    f(ia % 2 == 1, ib % 2 == 1, n);
    ra -= n;
    rb -= n;
  }
}

inline void require_same_frame(const InstanceMask& a, const InstanceMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ShapeMismatch("masks do not share a frame: " + std::to_string(a.width()) + "x" +
                        std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                        std::to_string(b.height()));
  }
}

}  // namespace detail

inline std::uint64_t intersection_area(const InstanceMask& a, const InstanceMask& b) {
  detail::require_same_frame(a, b);
  if (intersect(a.bbox(), b.bbox()).empty()) return 0;
  std::uint64_t n_both = 0;
  detail::zip_runs(a, b, [&](bool x, bool y, std::uint64_t n) {
    if (x && y) n_both += n;
  });
  return n_both;
}

inline InstanceMask mask_union(const InstanceMask& a, const InstanceMask& b) {
  detail::require_same_frame(a, b);
  RleBuilder out(a.width(), a.height());
  detail::zip_runs(a, b, [&](bool x, bool y, std::uint64_t n) { out.push(x || y, n); });
  return std::move(out).finish();
}

/// True when every set pixel of `inner` is also set in `outer`.
inline bool is_subset(const InstanceMask& inner, const InstanceMask& outer) {
  return intersection_area(inner, outer) == inner.area();
}

}  // namespace planksynth
