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

// Small hand-built data shared by the unit tests.

#pragma once

#include <filesystem>
#include <string>

#include "planksynth/dataset_io.hpp"
#include "planksynth/demo.hpp"
#include "planksynth/remap.hpp"

namespace planksynth::testing {

inline std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::path(PLANKSYNTH_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline InstanceMask rect_mask(int frame_w, int frame_h, BBox r) {
  Bitmap b(frame_w, frame_h);
  for (int y = r.y; y < r.y + r.h; ++y) {
    for (int x = r.x; x < r.x + r.w; ++x) b.at(x, y) = 1;
  }
  return rle_encode(b);
}

/// Three images, seven annotations, four families from the demo taxonomy.
inline AnnotationSet three_image_fixture() {
  const Taxonomy tax = demo::taxonomy();
  AnnotationSet set;
  set.info.seed = 42;
  set.info.config_digest = "00000000deadbeef";
  set.info.config = ojson{{"canvas_width", 40}, {"canvas_height", 30}};
  for (std::int64_t f : {100, 101, 108, 112}) set.categories.push_back(category_for(tax.at(f)));
  set.images = {{1, "images/000000.png", 40, 30, "aaaa"},
                {2, "images/000001.png", 40, 30, "bbbb"},
                {3, "images/000002.png", 40, 30, std::nullopt}};
  const struct {
    std::int64_t image, cat;
    BBox r;
    double vf;
  } rows[] = {{1, 100, {0, 0, 5, 5}, 1.0},    {1, 101, {10, 10, 8, 3}, 0.5},  {1, 108, {30, 20, 10, 10}, 0.25},
              {2, 100, {2, 3, 1, 1}, 1.0},    {2, 112, {0, 0, 40, 30}, 0.125}, {3, 101, {39, 29, 1, 1}, 0.75},
              {3, 108, {5, 5, 20, 2}, 1.0}};
  std::int64_t id = 1;
  for (const auto& r : rows) {
    set.annotations.push_back(make_annotation(id++, r.image, r.cat, rect_mask(40, 30, r.r), r.vf));
  }
  return set;
}

}  // namespace planksynth::testing
