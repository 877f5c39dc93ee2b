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

#include <map>

#include "planksynth/dataset_io.hpp"
#include "planksynth/taxonomy.hpp"

namespace planksynth {

inline Category category_for(const Taxon& t) { return Category{t.id, t.name, t.rank, t.parent_id}; }

/// Rewrites category ids to their ancestors at `rank`. Images, masks,
/// boxes and areas are untouched; the category table becomes the distinct
/// ancestors of the existing categories, sorted by id.
inline AnnotationSet remap_annotations(const AnnotationSet& set, LabelRank rank,
                                       const Taxonomy& taxonomy) {
  AnnotationSet out = set;
  std::map<std::int64_t, const Taxon*> ancestors;
  auto lift = [&](std::int64_t category_id) -> const Taxon& {
    auto it = ancestors.find(category_id);
    if (it == ancestors.end()) {
      it = ancestors.emplace(category_id, &taxonomy.ancestor_at(category_id, rank)).first;
    }
    return *it->second;
  };

  std::map<std::int64_t, Category> table;
  for (const auto& c : set.categories) {
    const Taxon& t = lift(c.id);
    table.emplace(t.id, category_for(t));
  }
  for (auto& a : out.annotations) {
    const Taxon& t = lift(a.category_id);
    a.category_id = t.id;
    table.emplace(t.id, category_for(t));
  }
  out.categories.clear();
  for (auto& [id, c] : table) out.categories.push_back(std::move(c));
  return out;
}

}  // namespace planksynth
