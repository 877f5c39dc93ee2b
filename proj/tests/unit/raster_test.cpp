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

#include <cmath>
#include <filesystem>
#include <random>

#include "planksynth/png_io.hpp"
#include "planksynth/raster.hpp"

namespace planksynth {
namespace {

Raster random_raster(std::mt19937& gen, int w, int h, int c) {
  Raster r(w, h, c);
  std::uniform_int_distribution<int> v(0, 255);
  for (auto& s : r.data) s = static_cast<std::uint8_t>(v(gen));
  return r;
}

Bitmap full_mask(int w, int h) {
  Bitmap b(w, h);
  std::fill(b.bits.begin(), b.bits.end(), 1);
  return b;
}

TEST(Affine, IdentityIsPixelExact) {
  std::mt19937 gen(1);
  const Raster img = random_raster(gen, 17, 9, 3);
  Bitmap mask(17, 9);
  mask.at(3, 4) = mask.at(10, 2) = 1;
  const auto out = transform_cutout(img, mask, AffineParams{});
  EXPECT_EQ(out.image, img);
  EXPECT_EQ(out.mask, mask);
}

TEST(Affine, RightAngleRotationPermutesPixels) {
  std::mt19937 gen(2);
  const Raster img = random_raster(gen, 12, 5, 1);
  Bitmap mask(12, 5);
  mask.at(0, 0) = mask.at(11, 4) = mask.at(6, 2) = 1;
  const auto out = affine_transform(img, rle_encode(mask), AffineParams{false, false, 90.0, 1.0});
  EXPECT_EQ(out.image.width, 5);
  EXPECT_EQ(out.image.height, 12);
  EXPECT_EQ(out.mask.area(), 3u);
  // Counter-clockwise as displayed: source top-right lands top-left.
  EXPECT_EQ(out.image.at(0, 0), img.at(11, 0));
  EXPECT_EQ(out.image.at(4, 11), img.at(0, 4));
}

TEST(Affine, ThirtyDegreesMatchesPolygonRasterization) {
  const int n = 100;
  const Raster img(n, n, 1, 50);
  const auto out = transform_cutout(img, full_mask(n, n), AffineParams{false, false, 30.0, 1.0});

  // Oracle: rotate the square's corners about the canvas centre and count
  // output pixel centres inside the polygon.
  const double a = 30.0 * M_PI / 180.0;
  const double cx = out.mask.width / 2.0, cy = out.mask.height / 2.0;
  std::vector<std::pair<double, double>> poly;
  for (auto [x, y] : {std::pair{-50.0, -50.0}, {50.0, -50.0}, {50.0, 50.0}, {-50.0, 50.0}}) {
    poly.emplace_back(cx + std::cos(a) * x + std::sin(a) * y, cy - std::sin(a) * x + std::cos(a) * y);
  }
  auto inside = [&](double px, double py) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      const auto [xi, yi] = poly[i];
      const auto [xj, yj] = poly[j];
      if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) in = !in;
    }
    return in;
  };
  std::uint64_t oracle = 0;
  for (int v = 0; v < out.mask.height; ++v) {
    for (int u = 0; u < out.mask.width; ++u) oracle += inside(u + 0.5, v + 0.5);
  }
  const double area = static_cast<double>(out.mask.count());
  EXPECT_NEAR(area, 10000.0, 200.0);
  EXPECT_NEAR(area, static_cast<double>(oracle), 0.02 * oracle);
  // Canvas is the tight box: side 100 (cos 30 + sin 30) = 136.6.
  EXPECT_EQ(out.mask.width, 137);
  EXPECT_EQ(out.mask.height, 137);
}

TEST(Affine, FlipIsInvolution) {
  std::mt19937 gen(3);
  for (int i = 0; i < 20; ++i) {
    const Raster img = random_raster(gen, 3 + i, 20 - i / 2, i % 2 ? 3 : 1);
    Bitmap mask(img.width, img.height);
    std::bernoulli_distribution bit(0.5);
    for (auto& b : mask.bits) b = bit(gen);
    mask.at(0, 0) = 1;
    const AffineParams p{i % 2 == 0, i % 3 == 0, 0.0, 1.0};
    const auto once = transform_cutout(img, mask, p);
    const auto twice = transform_cutout(once.image, once.mask, p);
    EXPECT_EQ(twice.image, img);
    EXPECT_EQ(twice.mask, mask);
  }
}

TEST(Affine, VanishingScaleIsDegenerate) {
  Bitmap mask(10, 10);
  mask.at(0, 0) = 1;
  EXPECT_THROW(transform_cutout(Raster(10, 10, 1), mask, AffineParams{false, false, 0.0, 0.01}),
               DegenerateTransform);
  EXPECT_THROW(transform_cutout(Raster(10, 10, 1), mask, AffineParams{false, false, 0.0, 0.0}), ConfigError);
}

TEST(Blur, ZeroSigmaAndConstantAreIdentity) {
  std::mt19937 gen(4);
  const Raster img = random_raster(gen, 23, 19, 3);
  EXPECT_EQ(gaussian_blur(img, 0.0), img);
  const Raster flat(40, 30, 1, 137);
  for (double s : {0.3, 1.0, 1.99, 5.0}) EXPECT_EQ(gaussian_blur(flat, s), flat);
  EXPECT_THROW(gaussian_blur(img, -1.0), ConfigError);
}

TEST(Blur, ImpulseMatchesKernelPeak) {
  Raster img(31, 31, 1, 0);
  img.at(15, 15) = 255;
  const Raster out = gaussian_blur(img, 1.0);
  // Discrete normalized kernel evaluated directly (radius 3).
  double sum = 0;
  for (int i = -3; i <= 3; ++i) sum += std::exp(-i * i / 2.0);
  const double peak = 255.0 / (sum * sum);
  EXPECT_NEAR(out.at(15, 15), peak, 1.0);
}

TEST(Blur, MeanPreservedAndSeparable) {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> sig(0.0, 2.0);
  for (int i = 0; i < 30; ++i) {
    const Raster img = random_raster(gen, 8 + i * 3, 40 - i, i % 2 ? 3 : 1);
    const double s = sig(gen);
    const Raster a = detail::gaussian_blur_ordered(img, s, detail::BlurOrder::RowsFirst);
    const Raster b = detail::gaussian_blur_ordered(img, s, detail::BlurOrder::ColumnsFirst);
    EXPECT_NEAR(a.mean(), img.mean(), 0.5);
    for (std::size_t k = 0; k < a.data.size(); ++k) ASSERT_LE(std::abs(a.data[k] - b.data[k]), 1);
  }
}

TEST(Composite, OutsideIsFullyTruncated) {
  const Raster base(100, 100, 1, 9);
  const auto fg_mask = rle_encode(full_mask(10, 10));
  const auto r = composite(base, Raster(10, 10, 1, 200), fg_mask, Offset{100, 3});
  EXPECT_TRUE(r.fully_truncated);
  EXPECT_EQ(r.image, base);
  const auto r2 = composite(base, Raster(10, 10, 1, 200), fg_mask, Offset{-10, -10});
  EXPECT_TRUE(r2.fully_truncated);
}

TEST(Composite, EmptyMaskLeavesBase) {
  const Raster base(100, 100, 1, 9);
  const auto r = composite(base, Raster(10, 10, 1, 200), rle_encode(Bitmap(10, 10)), Offset{5, 5});
  EXPECT_FALSE(r.fully_truncated);
  EXPECT_EQ(r.image, base);
  EXPECT_EQ(r.pasted, 0u);
}

TEST(Composite, PartialOverlapCountsRectangle) {
  const Raster base(100, 100, 1, 9);
  const auto r = composite(base, Raster(10, 10, 1, 200), rle_encode(full_mask(10, 10)), Offset{-5, 0});
  std::uint64_t changed = 0;
  for (std::size_t k = 0; k < base.data.size(); ++k) changed += base.data[k] != r.image.data[k];
  EXPECT_EQ(changed, 50u);
  EXPECT_EQ(r.pasted, 50u);
}

TEST(Composite, NeverTouchesPixelsOutsideFootprint) {
  std::mt19937 gen(6);
  std::uniform_int_distribution<int> off(-30, 60);
  for (int i = 0; i < 100; ++i) {
    const Raster base = random_raster(gen, 64, 48, 3);
    Raster fg = random_raster(gen, 25, 17, 3);
    Bitmap mask(25, 17);
    std::bernoulli_distribution bit(0.3);
    for (auto& b : mask.bits) b = bit(gen);
    const Offset o{off(gen), off(gen)};
    const auto r = composite(base, fg, rle_encode(mask), o);
    for (int y = 0; y < base.height; ++y) {
      for (int x = 0; x < base.width; ++x) {
        const int fx = x - o.x, fy = y - o.y;
        const bool covered = fx >= 0 && fy >= 0 && fx < 25 && fy < 17 && mask.at(fx, fy);
        for (int c = 0; c < 3; ++c) {
          ASSERT_EQ(r.image.at(x, y, c), covered ? fg.at(fx, fy, c) : base.at(x, y, c));
        }
      }
    }
  }
}

TEST(Png, RoundTripGrayAndRgb) {
  std::mt19937 gen(8);
  const auto dir = std::filesystem::path(PLANKSYNTH_TEST_TMP) / "raster_png";
  std::filesystem::create_directories(dir);
  for (int c : {1, 3}) {
    const Raster img = random_raster(gen, 37, 21, c);
    const auto path = dir / ("img" + std::to_string(c) + ".png");
    write_png(path, img);
    EXPECT_EQ(read_png(path), img);
  }
  Bitmap m(9, 4);
  m.at(2, 3) = m.at(8, 0) = 1;
  write_mask_png(dir / "mask.png", m);
  EXPECT_EQ(read_mask_png(dir / "mask.png"), m);
  EXPECT_THROW(read_png(dir / "missing.png"), IoError);
}

TEST(Channels, GrayRgbRoundTrip) {
  std::mt19937 gen(9);
  const Raster g = random_raster(gen, 10, 10, 1);
  EXPECT_EQ(convert_channels(convert_channels(g, 3), 1), g);
}

}  // namespace
}  // namespace planksynth
