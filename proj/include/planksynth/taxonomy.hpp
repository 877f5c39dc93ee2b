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

// Five-rank taxonomy (Class > Order > Family > Genus > Species) loaded from
// a JSON table, with ancestor lookup for label-granularity changes.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "planksynth/errors.hpp"

namespace planksynth {

/// Ordered from the top of the hierarchy down; a smaller value is a higher rank.
enum class Rank : int { Class = 0, Order = 1, Family = 2, Genus = 3, Species = 4 };

/// The ranks that may be used as training labels.
enum class LabelRank : int { Class = 0, Order = 1, Family = 2 };

inline constexpr Rank to_rank(LabelRank r) { return static_cast<Rank>(static_cast<int>(r)); }

inline std::string_view rank_name(Rank r) {
  switch (r) {
    case Rank::Class: return "Class";
    case Rank::Order: return "Order";
    case Rank::Family: return "Family";
    case Rank::Genus: return "Genus";
    case Rank::Species: return "Species";
  }
  return "?";
}

inline std::optional<Rank> parse_rank(std::string_view s) {
  for (Rank r : {Rank::Class, Rank::Order, Rank::Family, Rank::Genus, Rank::Species}) {
    if (rank_name(r) == s) return r;
  }
  return std::nullopt;
}

inline std::optional<LabelRank> parse_label_rank(std::string_view s) {
  auto r = parse_rank(s);
  if (!r || *r > Rank::Family) return std::nullopt;
  return static_cast<LabelRank>(static_cast<int>(*r));
}

struct Taxon {
  std::int64_t id = 0;
  std::string name;
  Rank rank = Rank::Family;
  std::optional<std::int64_t> parent_id;

  friend bool operator==(const Taxon&, const Taxon&) = default;
};

/// Immutable, validated taxonomy table.
class Taxonomy {
 public:
  Taxonomy() = default;

  /// Validates unique ids, resolvable parents and strictly ascending rank
  /// along every parent link (which also rules out cycles).
  explicit Taxonomy(std::vector<Taxon> taxa) : taxa_(std::move(taxa)) {
    for (std::size_t i = 0; i < taxa_.size(); ++i) {
      if (!index_.emplace(taxa_[i].id, i).second) {
        throw BrokenTaxonomy("duplicate taxon id " + std::to_string(taxa_[i].id));
      }
    }
    for (const auto& t : taxa_) {
      if (!t.parent_id) continue;
      const Taxon* p = find(*t.parent_id);
      if (!p) {
        throw BrokenTaxonomy("taxon " + std::to_string(t.id) + " (" + t.name +
                             ") has unknown parent " + std::to_string(*t.parent_id));
      }
      if (p->rank >= t.rank) {
        throw BrokenTaxonomy("taxon " + std::to_string(t.id) + " (" + t.name +
                             ") has parent of equal or lower rank");
      }
    }
  }

  static Taxonomy from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw SchemaError("taxonomy must be a JSON array of taxon records");
    std::vector<Taxon> taxa;
    for (const auto& rec : j) {
      if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_number_integer()) {
        throw SchemaError("taxonomy record without integer 'id': " + rec.dump());
      }
      Taxon t;
      t.id = rec["id"].get<std::int64_t>();
      const std::string where = "taxon " + std::to_string(t.id);
      if (!rec.contains("name") || !rec["name"].is_string()) {
        throw SchemaError(where + ": missing string 'name'");
      }
      t.name = rec["name"].get<std::string>();
      if (!rec.contains("rank") || !rec["rank"].is_string()) {
        throw SchemaError(where + ": missing string 'rank'");
      }
      auto rank = parse_rank(rec["rank"].get<std::string>());
      if (!rank) throw SchemaError(where + ": unknown rank '" + rec["rank"].get<std::string>() + "'");
      t.rank = *rank;
      if (rec.contains("parent_id") && !rec["parent_id"].is_null()) {
        if (!rec["parent_id"].is_number_integer()) throw SchemaError(where + ": 'parent_id' must be an integer");
        t.parent_id = rec["parent_id"].get<std::int64_t>();
      }
      taxa.push_back(std::move(t));
    }
    return Taxonomy(std::move(taxa));
  }

  static Taxonomy load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError(path.string() + ": cannot open taxonomy file");
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path.string() + ": " + e.what());
    }
    return from_json(j);
  }

  nlohmann::ordered_json to_json() const {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : taxa_) {
      nlohmann::ordered_json rec;
      rec["id"] = t.id;
      rec["name"] = t.name;
      rec["rank"] = std::string(rank_name(t.rank));
      rec["parent_id"] = t.parent_id ? nlohmann::ordered_json(*t.parent_id) : nlohmann::ordered_json(nullptr);
      arr.push_back(std::move(rec));
    }
    return arr;
  }

  const Taxon* find(std::int64_t id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &taxa_[it->second];
  }

  const Taxon& at(std::int64_t id) const {
    if (const Taxon* t = find(id)) return *t;
    throw BrokenTaxonomy("unknown taxon id " + std::to_string(id));
  }

  const std::vector<Taxon>& taxa() const { return taxa_; }
  std::size_t size() const { return taxa_.size(); }

  /// Walks parent links up to `rank`. Throws BrokenTaxonomy naming the
  /// taxon when the chain has no member at that rank, or when the taxon
  /// already sits above it.
  const Taxon& ancestor_at(std::int64_t taxon_id, LabelRank label_rank) const {
    const Rank rank = to_rank(label_rank);
    const Taxon& start = at(taxon_id);
    if (start.rank < rank) {
      throw BrokenTaxonomy("taxon " + std::to_string(start.id) + " (" + start.name + ") is " +
                           std::string(rank_name(start.rank)) + ", above requested rank " +
                           std::string(rank_name(rank)));
    }
    const Taxon* t = &start;
    while (t->rank != rank) {
      if (!t->parent_id || t->rank < rank) break;
      t = &at(*t->parent_id);
    }
    if (t->rank != rank) {
      throw BrokenTaxonomy("taxon " + std::to_string(start.id) + " (" + start.name +
                           ") has no ancestor at rank " + std::string(rank_name(rank)));
    }
    return *t;
  }

 private:
  std::vector<Taxon> taxa_;
  std::map<std::int64_t, std::size_t> index_;
};

}  // namespace planksynth
