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

// COCO-style manifests (annotations.json) and detection files
// (detections.json): in-memory model, deterministic serialization,
// schema-checked loading, and invariant validation.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "planksynth/errors.hpp"
#include "planksynth/mask.hpp"
#include "planksynth/taxonomy.hpp"

namespace planksynth {

using ojson = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "planksynth 0.1.0";

struct ImageRecord {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::optional<std::string> recipe_digest;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Category {
  std::int64_t id = 0;
  std::string name;
  Rank rank = Rank::Family;
  std::optional<std::int64_t> parent_id;

  friend bool operator==(const Category&, const Category&) = default;
};

struct Annotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  Rle segmentation;
  BBox bbox;
  std::uint64_t area = 0;
  int iscrowd = 0;
  std::optional<double> visible_fraction;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Provenance {
  std::optional<std::uint64_t> seed;
  std::string config_digest;
  std::string tool_version = kToolVersion;
  ojson config;  // null when absent

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct AnnotationSet {
  Provenance info;
  std::vector<ImageRecord> images;
  std::vector<Category> categories;
  std::vector<Annotation> annotations;

  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

/// Builds an annotation whose bbox and area are taken from the mask.
inline Annotation make_annotation(std::int64_t id, std::int64_t image_id, std::int64_t category_id,
                                  const InstanceMask& mask,
                                  std::optional<double> visible_fraction = std::nullopt) {
  return Annotation{id, image_id, category_id, mask.rle(), mask.bbox(), mask.area(), 0,
                    visible_fraction};
}

struct Detection {
  std::optional<std::int64_t> id;  ///< tie-break key; defaults to list position
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  Rle segmentation;
  double score = 0.0;
  std::optional<int> tile;       ///< index into a tile plan (per-tile files only)
  std::optional<BBox> window;    ///< source tile rectangle after lifting

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectionSet {
  std::vector<Detection> detections;

  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

/// 64-bit FNV-1a over a byte string, as 16 lowercase hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline ojson rle_to_json(const Rle& rle) {
  ojson j;
  j["size"] = {rle.height, rle.width};
  j["counts"] = rle.counts;
  return j;
}

inline ojson bbox_to_json(const BBox& b) { return ojson::array({b.x, b.y, b.w, b.h}); }

inline ojson to_json(const AnnotationSet& set) {
  ojson j;
  ojson info;
  info["tool_version"] = set.info.tool_version;
  info["seed"] = set.info.seed ? ojson(*set.info.seed) : ojson(nullptr);
  info["config_digest"] = set.info.config_digest;
  info["config"] = set.info.config;
  j["info"] = std::move(info);

  auto images = ojson::array();
  for (const auto& im : set.images) {
    ojson r;
    r["id"] = im.id;
    r["file_name"] = im.file_name;
    r["width"] = im.width;
    r["height"] = im.height;
    if (im.recipe_digest) r["recipe_digest"] = *im.recipe_digest;
    images.push_back(std::move(r));
  }
  j["images"] = std::move(images);

  auto cats = ojson::array();
  for (const auto& c : set.categories) {
    ojson r;
    r["id"] = c.id;
    r["name"] = c.name;
    r["rank"] = std::string(rank_name(c.rank));
    r["parent_id"] = c.parent_id ? ojson(*c.parent_id) : ojson(nullptr);
    cats.push_back(std::move(r));
  }
  j["categories"] = std::move(cats);

  auto anns = ojson::array();
  for (const auto& a : set.annotations) {
    ojson r;
    r["id"] = a.id;
    r["image_id"] = a.image_id;
    r["category_id"] = a.category_id;
    r["segmentation"] = rle_to_json(a.segmentation);
    r["bbox"] = bbox_to_json(a.bbox);
    r["area"] = a.area;
    r["iscrowd"] = a.iscrowd;
    if (a.visible_fraction) r["visible_fraction"] = *a.visible_fraction;
    anns.push_back(std::move(r));
  }
  j["annotations"] = std::move(anns);
  return j;
}

/// Canonical bytes of a manifest: fixed key order, compact, trailing newline.
inline std::string serialize_manifest(const AnnotationSet& set) { return to_json(set).dump() + "\n"; }

inline ojson to_json(const DetectionSet& set) {
  auto arr = ojson::array();
  for (const auto& d : set.detections) {
    ojson r;
    if (d.id) r["id"] = *d.id;
    r["image_id"] = d.image_id;
    r["category_id"] = d.category_id;
    r["segmentation"] = rle_to_json(d.segmentation);
    r["score"] = d.score;
    if (d.tile) r["tile"] = *d.tile;
    if (d.window) r["window"] = bbox_to_json(*d.window);
    arr.push_back(std::move(r));
  }
  return arr;
}

inline std::string serialize_detections(const DetectionSet& set) { return to_json(set).dump() + "\n"; }

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(path.string() + ": cannot open for writing");
  f << text;
  if (!f) throw IoError(path.string() + ": write failed");
}

inline ojson read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path.string() + ": cannot open");
  try {
    return ojson::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": invalid JSON: " + e.what());
  }
}

/// Field accessors that raise SchemaError naming the record.
class RecordReader {
 public:
  RecordReader(const ojson& rec, std::string where) : rec_(rec), where_(std::move(where)) {
    if (!rec_.is_object()) throw SchemaError(where_ + ": expected an object");
  }

  const ojson& field(const char* key) const {
    if (!rec_.contains(key)) throw SchemaError(where_ + ": missing '" + key + "'");
    return rec_[key];
  }
  bool has(const char* key) const { return rec_.contains(key) && !rec_[key].is_null(); }

  std::int64_t integer(const char* key) const {
    const auto& v = field(key);
    if (!v.is_number_integer()) throw SchemaError(where_ + ": '" + key + "' must be an integer");
    return v.get<std::int64_t>();
  }
  double number(const char* key) const {
    const auto& v = field(key);
    if (!v.is_number()) throw SchemaError(where_ + ": '" + key + "' must be a number");
    return v.get<double>();
  }
  std::string string(const char* key) const {
    const auto& v = field(key);
    if (!v.is_string()) throw SchemaError(where_ + ": '" + key + "' must be a string");
    return v.get<std::string>();
  }
  BBox bbox(const char* key) const {
    const auto& v = field(key);
    if (!v.is_array() || v.size() != 4) throw SchemaError(where_ + ": '" + key + "' must be [x, y, w, h]");
    BBox b;
    int* dst[] = {&b.x, &b.y, &b.w, &b.h};
    for (int i = 0; i < 4; ++i) {
      if (!v[i].is_number_integer()) throw SchemaError(where_ + ": '" + key + "' entries must be integers");
      *dst[i] = v[i].get<int>();
    }
    return b;
  }
  Rle rle(const char* key) const {
    RecordReader seg(field(key), where_ + " segmentation");
    const auto& size = seg.field("size");
    if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() ||
        !size[1].is_number_integer()) {
      throw SchemaError(where_ + ": segmentation 'size' must be [height, width]");
    }
    const auto& counts = seg.field("counts");
    if (!counts.is_array()) {
      throw SchemaError(where_ + ": segmentation 'counts' must be an array (uncompressed RLE)");
    }
    Rle r{size[0].get<int>(), size[1].get<int>(), {}};
    r.counts.reserve(counts.size());
    for (const auto& c : counts) {
      if (!c.is_number_unsigned() && !(c.is_number_integer() && c.get<std::int64_t>() >= 0)) {
        throw SchemaError(where_ + ": segmentation counts must be non-negative integers");
      }
      r.counts.push_back(c.get<std::uint32_t>());
    }
    return r;
  }

 private:
  const ojson& rec_;
  std::string where_;
};

inline const ojson& array_field(const ojson& root, const char* key, const std::string& where) {
  if (!root.contains(key) || !root[key].is_array()) {
    throw SchemaError(where + ": missing array '" + key + "'");
  }
  return root[key];
}

}  // namespace detail

/// Parses a manifest; rejects schema errors and dangling references,
/// naming the offending record. Other invariants are left to validate().
inline AnnotationSet manifest_from_json(const ojson& j, const std::string& where = "manifest") {
  if (!j.is_object()) throw SchemaError(where + ": top level must be an object");
  AnnotationSet set;
  if (j.contains("info") && j["info"].is_object()) {
    const auto& info = j["info"];
    if (info.contains("seed") && info["seed"].is_number_unsigned()) set.info.seed = info["seed"].get<std::uint64_t>();
    if (info.contains("config_digest") && info["config_digest"].is_string()) {
      set.info.config_digest = info["config_digest"].get<std::string>();
    }
    if (info.contains("tool_version") && info["tool_version"].is_string()) {
      set.info.tool_version = info["tool_version"].get<std::string>();
    }
    if (info.contains("config")) set.info.config = info["config"];
  }

  for (const auto& rec : detail::array_field(j, "images", where)) {
    const std::string id_text = rec.is_object() && rec.contains("id") ? rec["id"].dump() : "?";
    detail::RecordReader r(rec, "image " + id_text);
    ImageRecord im;
    im.id = r.integer("id");
    im.file_name = r.string("file_name");
    im.width = static_cast<int>(r.integer("width"));
    im.height = static_cast<int>(r.integer("height"));
    if (r.has("recipe_digest")) im.recipe_digest = r.string("recipe_digest");
    set.images.push_back(std::move(im));
  }

  for (const auto& rec : detail::array_field(j, "categories", where)) {
    const std::string id_text = rec.is_object() && rec.contains("id") ? rec["id"].dump() : "?";
    detail::RecordReader r(rec, "category " + id_text);
    Category c;
    c.id = r.integer("id");
    c.name = r.string("name");
    if (r.has("rank")) {
      auto rank = parse_rank(r.string("rank"));
      if (!rank) throw SchemaError("category " + id_text + ": unknown rank");
      c.rank = *rank;
    }
    if (r.has("parent_id")) c.parent_id = r.integer("parent_id");
    set.categories.push_back(std::move(c));
  }

  std::set<std::int64_t> image_ids, category_ids;
  for (const auto& im : set.images) image_ids.insert(im.id);
  for (const auto& c : set.categories) category_ids.insert(c.id);

  for (const auto& rec : detail::array_field(j, "annotations", where)) {
    const std::string id_text = rec.is_object() && rec.contains("id") ? rec["id"].dump() : "?";
    const std::string label = "annotation " + id_text;
    detail::RecordReader r(rec, label);
    Annotation a;
    a.id = r.integer("id");
    a.image_id = r.integer("image_id");
    a.category_id = r.integer("category_id");
    a.segmentation = r.rle("segmentation");
    a.bbox = r.bbox("bbox");
    const std::int64_t area = r.integer("area");
    if (area < 0) throw SchemaError(label + ": 'area' must be non-negative");
    a.area = static_cast<std::uint64_t>(area);
    a.iscrowd = r.has("iscrowd") ? static_cast<int>(r.integer("iscrowd")) : 0;
    if (r.has("visible_fraction")) a.visible_fraction = r.number("visible_fraction");
    if (!image_ids.count(a.image_id)) {
      throw SchemaError(label + ": dangling image_id " + std::to_string(a.image_id));
    }
    if (!category_ids.count(a.category_id)) {
      throw SchemaError(label + ": dangling category_id " + std::to_string(a.category_id));
    }
    set.annotations.push_back(std::move(a));
  }
  return set;
}

inline void write_manifest(const AnnotationSet& set, const std::filesystem::path& path) {
  detail::write_text(path, serialize_manifest(set));
}

inline AnnotationSet read_manifest(const std::filesystem::path& path) {
  return manifest_from_json(detail::read_json_file(path), path.string());
}

inline DetectionSet detections_from_json(const ojson& j, const std::string& where = "detections") {
  if (!j.is_array()) throw SchemaError(where + ": top level must be an array of detections");
  DetectionSet set;
  std::size_t index = 0;
  for (const auto& rec : j) {
    const std::string label = "detection " + (rec.is_object() && rec.contains("id")
                                                  ? rec["id"].dump()
                                                  : "#" + std::to_string(index));
    detail::RecordReader r(rec, label);
    Detection d;
    if (r.has("id")) d.id = r.integer("id");
    d.image_id = r.integer("image_id");
    d.category_id = r.integer("category_id");
    d.segmentation = r.rle("segmentation");
    d.score = r.number("score");
    if (!(d.score >= 0.0 && d.score <= 1.0)) throw SchemaError(label + ": score outside [0, 1]");
    if (r.has("tile")) d.tile = static_cast<int>(r.integer("tile"));
    if (r.has("window")) d.window = r.bbox("window");
    set.detections.push_back(std::move(d));
    ++index;
  }
  return set;
}

inline void write_detections(const DetectionSet& set, const std::filesystem::path& path) {
  detail::write_text(path, serialize_detections(set));
}

inline DetectionSet read_detections(const std::filesystem::path& path) {
  return detections_from_json(detail::read_json_file(path), path.string());
}

/// Detections equivalent to the ground truth, all with score 1.
inline DetectionSet detections_from_annotations(const AnnotationSet& set, double score = 1.0) {
  DetectionSet out;
  for (const auto& a : set.annotations) {
    out.detections.push_back(Detection{a.id, a.image_id, a.category_id, a.segmentation, score, {}, {}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string kind;      ///< e.g. "dangling-image", "area", "bbox", "malformed-rle"
  std::string record;    ///< e.g. "annotation 17"
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Every invariant violation in the set; an empty result means sound.
inline std::vector<Violation> validate(const AnnotationSet& set) {
  std::vector<Violation> out;
  std::map<std::int64_t, const ImageRecord*> images;
  for (const auto& im : set.images) {
    const std::string rec = "image " + std::to_string(im.id);
    if (!images.emplace(im.id, &im).second) out.push_back({"duplicate-id", rec, "duplicate image id"});
    if (im.width < 1 || im.height < 1) out.push_back({"image-size", rec, "non-positive image size"});
  }
  std::set<std::int64_t> categories;
  for (const auto& c : set.categories) {
    if (!categories.insert(c.id).second) {
      out.push_back({"duplicate-id", "category " + std::to_string(c.id), "duplicate category id"});
    }
  }
  std::set<std::int64_t> annotation_ids;
  for (const auto& a : set.annotations) {
    const std::string rec = "annotation " + std::to_string(a.id);
    if (!annotation_ids.insert(a.id).second) out.push_back({"duplicate-id", rec, "duplicate annotation id"});
    if (!categories.count(a.category_id)) {
      out.push_back({"dangling-category", rec, "category_id " + std::to_string(a.category_id) + " does not resolve"});
    }
    if (a.iscrowd != 0) out.push_back({"iscrowd", rec, "iscrowd must be 0"});
    if (a.visible_fraction && !(*a.visible_fraction > 0.0 && *a.visible_fraction <= 1.0)) {
      out.push_back({"visible-fraction", rec, "visible_fraction outside (0, 1]"});
    }
    auto im = images.find(a.image_id);
    if (im == images.end()) {
      out.push_back({"dangling-image", rec, "image_id " + std::to_string(a.image_id) + " does not resolve"});
    } else if (a.segmentation.width != im->second->width || a.segmentation.height != im->second->height) {
      out.push_back({"frame", rec, "segmentation size differs from image size"});
    }
    if (auto defect = rle_defect(a.segmentation)) {
      out.push_back({"malformed-rle", rec, *defect});
      continue;
    }
    const auto mask = InstanceMask::from_rle(a.segmentation);
    if (mask.area() != a.area) {
      out.push_back({"area", rec, "area " + std::to_string(a.area) + " but RLE has " +
                                      std::to_string(mask.area()) + " set pixels"});
    }
    if (mask.area() == 0) out.push_back({"empty", rec, "instance has no pixels"});
    if (!(mask.bbox() == a.bbox)) out.push_back({"bbox", rec, "bbox is not tight over the mask"});
  }
  return out;
}

}  // namespace planksynth
