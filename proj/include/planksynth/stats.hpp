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

#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>

#include "planksynth/dataset_io.hpp"

namespace planksynth {

/// Dataset summary: image and instance totals, instances per category and
/// the histogram of per-image instance counts.
struct ManifestStats {
  std::size_t images = 0;
  std::size_t instances = 0;
  std::size_t categories = 0;
  std::map<std::int64_t, std::size_t> per_category;
  std::map<std::size_t, std::size_t> per_image_histogram;  ///< labels per image -> number of images
};

inline ManifestStats manifest_stats(const AnnotationSet& set) {
  ManifestStats s;
  s.images = set.images.size();
  s.instances = set.annotations.size();
  s.categories = set.categories.size();
  std::map<std::int64_t, std::size_t> per_image;
  for (const auto& im : set.images) per_image[im.id] = 0;
  for (const auto& c : set.categories) s.per_category[c.id] = 0;
  for (const auto& a : set.annotations) {
    ++per_image[a.image_id];
    ++s.per_category[a.category_id];
  }
  for (const auto& [id, n] : per_image) ++s.per_image_histogram[n];
  return s;
}

inline ojson to_json(const ManifestStats& s, const AnnotationSet& set) {
  std::map<std::int64_t, std::string> names;
  for (const auto& c : set.categories) names[c.id] = c.name;
  ojson j;
  j["images"] = s.images;
  j["instances"] = s.instances;
  j["categories"] = s.categories;
  auto cats = ojson::array();
  for (const auto& [id, n] : s.per_category) {
    cats.push_back(ojson{{"id", id}, {"name", names.count(id) ? names[id] : ""}, {"instances", n}});
  }
  j["per_category"] = std::move(cats);
  auto hist = ojson::object();
  for (const auto& [k, n] : s.per_image_histogram) hist[std::to_string(k)] = n;
  j["per_image_histogram"] = std::move(hist);
  return j;
}

inline std::string format_stats(const ManifestStats& s, const AnnotationSet& set) {
  std::map<std::int64_t, std::string> names;
  for (const auto& c : set.categories) names[c.id] = c.name;
  std::ostringstream os;
  os << "images      " << s.images << "\n";
  os << "instances   " << s.instances << "\n";
  os << "categories  " << s.categories << "\n";
  os << "per category:\n";
  for (const auto& [id, n] : s.per_category) os << "  " << id << " " << (names.count(id) ? names[id] : "?") << " " << n << "\n";
  os << "labels per image:\n";
  for (const auto& [k, n] : s.per_image_histogram) os << "  " << k << ": " << n << "\n";
  return os.str();
}

}  // namespace planksynth
