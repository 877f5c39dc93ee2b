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

// PNG read (libpng simplified API) and write (direct zlib encoder).

#pragma once

#include <png.h>
#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "planksynth/errors.hpp"
#include "planksynth/mask.hpp"
#include "planksynth/raster.hpp"

namespace planksynth {

/// Reads an 8-bit PNG as gray (no colour) or RGB. Alpha is composited
/// onto black; 16-bit samples are reduced.
inline Raster read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError(path.string() + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Raster out(static_cast<int>(image.width), static_cast<int>(image.height), color ? 3 : 1);
  png_color background{0, 0, 0};
  if (!png_image_finish_read(&image, &background, out.data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError(path.string() + ": " + msg);
  }
  return out;
}

/// Any non-zero sample marks the pixel as set.
inline Bitmap read_mask_png(const std::filesystem::path& path) {
  const Raster r = read_png(path);
  Bitmap b(r.width, r.height);
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) {
      bool set = false;
      for (int c = 0; c < r.channels; ++c) set = set || r.at(x, y, c) != 0;
      b.at(x, y) = set ? 1 : 0;
    }
  }
  return b;
}

namespace detail {

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char* type,
                      const std::vector<std::uint8_t>& payload) {
  put_be32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

/// Encodes a raster as PNG bytes. Rows use the Sub filter; output is a pure
/// function of the pixels and the compression level.
inline std::vector<std::uint8_t> encode_png(const Raster& img, int compression_level = 1) {
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  std::vector<std::uint8_t> filtered((stride + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    std::uint8_t* dst = filtered.data() + (stride + 1) * y;
    const std::uint8_t* src = img.data.data() + stride * y;
    dst[0] = 1;  // Sub
    for (std::size_t i = 0; i < stride; ++i) {
      const std::uint8_t left = i >= static_cast<std::size_t>(img.channels) ? src[i - img.channels] : 0;
      dst[i + 1] = static_cast<std::uint8_t>(src[i] - left);
    }
  }
  uLongf zlen = compressBound(static_cast<uLong>(filtered.size()));
  std::vector<std::uint8_t> z(zlen);
  if (compress2(z.data(), &zlen, filtered.data(), static_cast<uLong>(filtered.size()),
                compression_level) != Z_OK) {
    throw IoError("zlib compression failed");
  }
  z.resize(zlen);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.insert(ihdr.end(), {8, static_cast<std::uint8_t>(img.channels == 3 ? 2 : 0), 0, 0, 0});
  detail::put_chunk(out, "IHDR", ihdr);
  detail::put_chunk(out, "IDAT", z);
  detail::put_chunk(out, "IEND", {});
  return out;
}

inline void write_png(const std::filesystem::path& path, const Raster& img,
                      int compression_level = 1) {
  const auto bytes = encode_png(img, compression_level);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(path.string() + ": cannot open for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError(path.string() + ": write failed");
}

inline void write_mask_png(const std::filesystem::path& path, const Bitmap& mask) {
  Raster r(mask.width, mask.height, 1);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) r.data[i] = mask.bits[i] ? 255 : 0;
  write_png(path, r);
}

}  // namespace planksynth
