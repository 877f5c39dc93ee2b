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

// The `planksynth` command line: generate / tile / merge / evaluate /
// render / encgeom / stats. Exit codes: 0 success, 1 usage or config
// error, 2 data error.

#pragma once

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "planksynth/dataset_io.hpp"
#include "planksynth/encgeom.hpp"
#include "planksynth/errors.hpp"
#include "planksynth/evaluator.hpp"
#include "planksynth/pcigen.hpp"
#include "planksynth/png_io.hpp"
#include "planksynth/render.hpp"
#include "planksynth/stats.hpp"
#include "planksynth/taxonomy.hpp"
#include "planksynth/tiler.hpp"

namespace planksynth::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2 };

namespace fs = std::filesystem;

/// Parses "start:step:stop" or a comma list. Values are rounded to four
/// decimals so that 0.5:0.05:0.95 yields exactly the decimal thresholds.
inline std::vector<double> parse_thresholds(const std::string& text) {
  auto to_double = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("cannot parse threshold list '" + text + "'");
    }
  };
  auto decimal = [](double v) { return std::round(v * 10000.0) / 10000.0; };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ConfigError("threshold range must be start:step:stop");
    const double start = to_double(parts[0]), step = to_double(parts[1]), stop = to_double(parts[2]);
    if (!(step > 0)) throw ConfigError("threshold step must be positive");
    for (int k = 0; start + k * step <= stop + 1e-9; ++k) out.push_back(decimal(start + k * step));
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(decimal(to_double(p)));
  }
  return out;
}

inline nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot open config file");
  try {
    auto j = nlohmann::json::parse(f);
    if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Resolves a path found in a config file relative to that file.
inline std::string config_path(const nlohmann::json& cfg, const char* key, const std::string& config_file) {
  if (!cfg.contains(key)) return {};
  if (!cfg[key].is_string()) throw ConfigError(std::string("config '") + key + "' must be a string");
  fs::path p = cfg[key].get<std::string>();
  if (p.is_relative() && !config_file.empty()) p = fs::path(config_file).parent_path() / p;
  return p.string();
}

template <typename T>
void config_value(const nlohmann::json& cfg, const char* key, T& dst) {
  if (!cfg.contains(key)) return;
  try {
    dst = cfg[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config '") + key + "' has the wrong type");
  }
}

inline std::string fmt4(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

/// Fixed-width table in the column order mAP, AP50, APS, APM, APL.
inline std::string format_eval_table(const EvalResult& r) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "mAP" << std::setw(8) << "AP50" << std::setw(8) << "APS" << std::setw(8) << "APM"
     << "APL\n";
  os << std::setw(8) << fmt4(r.map) << std::setw(8) << fmt4(r.ap50) << std::setw(8) << fmt4(r.ap_s) << std::setw(8)
     << fmt4(r.ap_m) << fmt4(r.ap_l) << "\n";
  return os.str();
}

inline unsigned resolve_jobs(int jobs) {
  if (jobs > 0) return static_cast<unsigned>(jobs);
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string config, backgrounds, individuals, taxonomy, out, label_rank;
  std::optional<std::uint64_t> count, seed;
  int jobs = 1;
  bool json = false;
};

inline int run_generate(const GenerateArgs& a, std::ostream& out) {
  const auto cfg_json = load_config(a.config);
  PciConfig cfg = PciConfig::from_json(cfg_json);
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();
  std::string backgrounds = a.backgrounds.empty() ? config_path(cfg_json, "backgrounds", a.config) : a.backgrounds;
  std::string individuals = a.individuals.empty() ? config_path(cfg_json, "individuals", a.config) : a.individuals;
  std::string taxonomy = a.taxonomy.empty() ? config_path(cfg_json, "taxonomy", a.config) : a.taxonomy;
  if (backgrounds.empty() || individuals.empty() || taxonomy.empty()) {
    throw ConfigError("generate needs backgrounds, individuals and taxonomy (flags or config keys)");
  }
  std::uint64_t count = 0;
  config_value(cfg_json, "count", count);
  if (a.count) count = *a.count;
  std::string rank_text = "Family";
  config_value(cfg_json, "label_rank", rank_text);
  if (!a.label_rank.empty()) rank_text = a.label_rank;
  const auto rank = parse_label_rank(rank_text);
  if (!rank) throw ConfigError("label rank must be Class, Order or Family");

  const Taxonomy tax = Taxonomy::load(taxonomy);
  const SourcePools pools = load_pools(backgrounds, individuals);
  GenerateOptions opts;
  opts.jobs = resolve_jobs(a.jobs);
  opts.label_rank = *rank;
  const AnnotationSet set = generate_dataset(cfg, pools, tax, count, a.out, opts);
  if (a.json) {
    out << ojson{{"images", set.images.size()}, {"instances", set.annotations.size()},
                 {"manifest", (fs::path(a.out) / "annotations.json").string()}}
               .dump()
        << "\n";
  } else {
    out << "wrote " << set.images.size() << " images, " << set.annotations.size() << " instances to "
        << (fs::path(a.out) / "annotations.json").string() << "\n";
  }
  return kOk;
}

struct TileArgs {
  std::string config, image, out;
  std::optional<int> tile, overlap;
  int jobs = 1;
  bool json = false;
};

inline int run_tile(const TileArgs& a, std::ostream& out) {
  const auto cfg = load_config(a.config);
  int tile = 1000, overlap = 200;
  config_value(cfg, "tile", tile);
  config_value(cfg, "overlap", overlap);
  if (a.tile) tile = *a.tile;
  if (a.overlap) overlap = *a.overlap;
  const Raster img = read_png(a.image);
  const TilePlan plan = plan_tiles(img.width, img.height, tile, overlap);
  fs::create_directories(a.out);
  const auto tiles = crop(img, plan);
  std::vector<std::string> names(tiles.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(tiles.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < tiles.size(); i = next++) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "tile_%05zu.png", i);
      names[i] = buf;
      try {
        write_png(fs::path(a.out) / names[i], tiles[i].image);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < resolve_jobs(a.jobs); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  ojson j = to_json(plan);
  j["image"] = a.image;
  for (std::size_t i = 0; i < names.size(); ++i) j["tiles"][i]["file"] = names[i];
  detail::write_text(fs::path(a.out) / "tiles.json", j.dump(1) + "\n");
  if (a.json) {
    out << ojson{{"tiles", plan.tiles.size()}, {"plan", (fs::path(a.out) / "tiles.json").string()}}.dump() << "\n";
  } else {
    out << "wrote " << plan.tiles.size() << " tiles to " << a.out << "\n";
  }
  return kOk;
}

struct MergeArgs {
  std::string detections, plan, out;
  double iou = 0.5;
  bool no_merge = false;
  bool no_seam_aware = false;
  bool json = false;
};

inline int run_merge(const MergeArgs& a, std::ostream& out) {
  const TilePlan plan = read_tile_plan(a.plan);
  const DetectionSet per_tile = read_detections(a.detections);
  std::map<int, DetectionSet> by_tile;
  for (const auto& d : per_tile.detections) {
    if (!d.tile) throw SchemaError(a.detections + ": detection without 'tile' index");
    if (*d.tile < 0 || static_cast<std::size_t>(*d.tile) >= plan.tiles.size()) {
      throw SchemaError(a.detections + ": tile index " + std::to_string(*d.tile) + " not in plan");
    }
    by_tile[*d.tile].detections.push_back(d);
  }
  DetectionSet lifted;
  for (const auto& [t, set] : by_tile) {
    for (auto& d : lift_detections(set, plan.tiles[static_cast<std::size_t>(t)], plan.image_width, plan.image_height)
                       .detections) {
      lifted.detections.push_back(std::move(d));
    }
  }
  MergeConfig mc{a.iou, !a.no_seam_aware};
  const DetectionSet merged = a.no_merge ? lifted : merge_by_image(lifted, mc);
  write_detections(merged, a.out);
  if (a.json) {
    out << ojson{{"input", per_tile.detections.size()}, {"output", merged.detections.size()}}.dump() << "\n";
  } else {
    out << per_tile.detections.size() << " per-tile detections -> " << merged.detections.size() << " merged\n";
  }
  return kOk;
}

struct EvaluateArgs {
  std::string config, gt, dt, thresholds, out;
  bool class_agnostic = false;
  std::optional<int> max_dets;
  bool json = false;
};

inline int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto cfg_json = load_config(a.config);
  EvalConfig cfg;
  config_value(cfg_json, "class_agnostic", cfg.class_agnostic);
  config_value(cfg_json, "max_detections_per_image", cfg.max_detections_per_image);
  if (cfg_json.contains("iou_thresholds")) config_value(cfg_json, "iou_thresholds", cfg.iou_thresholds);
  if (!a.thresholds.empty()) cfg.iou_thresholds = parse_thresholds(a.thresholds);
  if (a.class_agnostic) cfg.class_agnostic = true;
  if (a.max_dets) cfg.max_detections_per_image = *a.max_dets;
  cfg.collect_pairs = false;
  cfg.validate();
  const AnnotationSet gt = read_manifest(a.gt);
  const DetectionSet dt = read_detections(a.dt);
  const EvalResult r = evaluate(dt, gt, cfg);
  ojson j = to_json(r);
  j["class_agnostic"] = cfg.class_agnostic;
  if (!a.out.empty()) detail::write_text(a.out, j.dump(1) + "\n");
  out << (a.json ? j.dump() + "\n" : format_eval_table(r));
  return kOk;
}

struct RenderArgs {
  std::string image, gt, dt, out;
  std::optional<std::int64_t> image_id;
  double alpha = 0.4;
  bool no_contours = false, no_labels = false;
};

inline int run_render(const RenderArgs& a, std::ostream& out) {
  const Raster img = read_png(a.image);
  const AnnotationSet gt = read_manifest(a.gt);
  std::int64_t image_id = 0;
  if (a.image_id) {
    image_id = *a.image_id;
  } else {
    const std::string base = fs::path(a.image).filename().string();
    bool found = false;
    for (const auto& im : gt.images) {
      if (fs::path(im.file_name).filename().string() == base) {
        image_id = im.id;
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("cannot infer the image id for " + base + "; pass --image-id");
  }
  const auto items = a.dt.empty() ? overlay_items(gt, image_id) : overlay_items(read_detections(a.dt), gt, image_id);
  const Raster overlay = render_overlay(img, items, OverlayStyle{a.alpha, !a.no_contours, !a.no_labels});
  write_png(a.out, overlay);
  out << "rendered " << items.size() << " instances to " << a.out << "\n";
  return kOk;
}

struct EncgeomArgs {
  bool check = false;
  int input_size = 384, patch_size = 32, embed_dim = 1024;
  double mask_ratio = 0.75;
  std::uint64_t seed = 0;
  bool json = false;
};

inline int run_encgeom(const EncgeomArgs& a, std::ostream& out) {
  if (!a.check) throw ConfigError("encgeom: nothing to do (use --check)");
  EncoderSpec spec;
  spec.input_size = a.input_size;
  spec.patch_size = a.patch_size;
  spec.embed_dim = a.embed_dim;
  const auto checks = run_geometry_check(spec, a.mask_ratio, a.seed);
  bool all = true;
  auto arr = ojson::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    if (a.json) {
      arr.push_back(ojson{{"check", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    } else {
      out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    }
  }
  if (a.json) out << ojson{{"passed", all}, {"checks", arr}}.dump() << "\n";
  return all ? kOk : kData;
}

struct StatsArgs {
  std::string manifest;
  bool json = false;
};

inline int run_stats(const StatsArgs& a, std::ostream& out) {
  const AnnotationSet set = read_manifest(a.manifest);
  const auto s = manifest_stats(set);
  out << (a.json ? to_json(s, set).dump() + "\n" : format_stats(s, set));
  return kOk;
}

// ---------------------------------------------------------------------------

/// Parses argv and dispatches. Never throws.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"planksynth: synthetic plankton community images, tiling and mask AP evaluation", "planksynth"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Synthesize a labeled image set");
  generate->add_option("--config", gen.config, "JSON config (PCI parameters and source paths)");
  generate->add_option("--backgrounds", gen.backgrounds, "Directory of background PNGs");
  generate->add_option("--individuals", gen.individuals, "Directory with individuals.json and cutout PNGs");
  generate->add_option("--taxonomy", gen.taxonomy, "Taxonomy JSON");
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--count", gen.count, "Number of images");
  generate->add_option("--seed", gen.seed, "Random seed (overrides config)");
  generate->add_option("--jobs", gen.jobs, "Worker threads (0 = all cores)");
  generate->add_option("--label-rank", gen.label_rank, "Class, Order or Family (default Family)");
  generate->add_flag("--json", gen.json, "Machine-readable summary");

  TileArgs tl;
  auto* tile = app.add_subcommand("tile", "Cut a large image into overlapping tiles");
  tile->add_option("--config", tl.config, "JSON config with tile/overlap");
  tile->add_option("--image", tl.image, "Input PNG")->required();
  tile->add_option("--tile", tl.tile, "Tile size in pixels (default 1000)");
  tile->add_option("--overlap", tl.overlap, "Overlap in pixels (default 200)");
  tile->add_option("--out", tl.out, "Output directory")->required();
  tile->add_option("--jobs", tl.jobs, "Worker threads (0 = all cores)");
  tile->add_flag("--json", tl.json, "Machine-readable summary");

  MergeArgs mg;
  auto* merge = app.add_subcommand("merge", "Lift per-tile detections and merge seam duplicates");
  merge->add_option("--detections", mg.detections, "Per-tile detections JSON (with 'tile' indices)")->required();
  merge->add_option("--plan", mg.plan, "tiles.json written by 'tile'")->required();
  merge->add_option("--out", mg.out, "Merged detections JSON")->required();
  merge->add_option("--iou", mg.iou, "IoU merge threshold (default 0.5)");
  merge->add_flag("--no-merge", mg.no_merge, "Only lift to full-image coordinates");
  merge->add_flag("--no-seam-aware", mg.no_seam_aware, "Compare whole masks instead of tile overlaps");
  merge->add_flag("--json", mg.json, "Machine-readable summary");

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score detections against ground truth");
  evaluate_cmd->add_option("--config", ev.config, "JSON config mirroring the evaluation options");
  evaluate_cmd->add_option("--gt", ev.gt, "Ground-truth annotations.json")->required();
  evaluate_cmd->add_option("--dt", ev.dt, "detections.json")->required();
  evaluate_cmd->add_flag("--class-agnostic", ev.class_agnostic, "Collapse all categories");
  evaluate_cmd->add_option("--thresholds", ev.thresholds, "start:step:stop or comma list (default 0.5:0.05:0.95)");
  evaluate_cmd->add_option("--max-dets", ev.max_dets, "Detections kept per image (default 100)");
  evaluate_cmd->add_option("--out", ev.out, "Write the result JSON here");
  evaluate_cmd->add_flag("--json", ev.json, "Print JSON instead of the table");

  RenderArgs rd;
  auto* render = app.add_subcommand("render", "Draw masks over an image");
  render->add_option("--image", rd.image, "Input PNG")->required();
  render->add_option("--gt", rd.gt, "annotations.json (categories and, without --dt, the masks)")->required();
  render->add_option("--dt", rd.dt, "Draw these detections instead of the ground truth");
  render->add_option("--out", rd.out, "Output PNG")->required();
  render->add_option("--image-id", rd.image_id, "Image id (default: matched by file name)");
  render->add_option("--alpha", rd.alpha, "Fill opacity (default 0.4)");
  render->add_flag("--no-contours", rd.no_contours, "Skip outlines");
  render->add_flag("--no-labels", rd.no_labels, "Skip captions");

  EncgeomArgs eg;
  auto* encgeom = app.add_subcommand("encgeom", "Encoder token-geometry self-check");
  encgeom->add_flag("--check", eg.check, "Run the shape and round-trip checks");
  encgeom->add_option("--input-size", eg.input_size, "Input side (default 384)");
  encgeom->add_option("--patch-size", eg.patch_size, "Patch side (default 32)");
  encgeom->add_option("--embed-dim", eg.embed_dim, "Channels of the tap maps (default 1024)");
  encgeom->add_option("--mask-ratio", eg.mask_ratio, "MAE mask ratio (default 0.75)");
  encgeom->add_option("--seed", eg.seed, "Mask seed");
  encgeom->add_flag("--json", eg.json, "Machine-readable report");

  StatsArgs st;
  auto* stats = app.add_subcommand("stats", "Summarize a manifest");
  stats->add_option("manifest", st.manifest, "annotations.json")->required();
  stats->add_flag("--json", st.json, "Machine-readable summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error[usage]: " << e.what() << "\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kUsage;
  }

  try {
    if (*generate) return run_generate(gen, out);
    if (*tile) return run_tile(tl, out);
    if (*merge) return run_merge(mg, out);
    if (*evaluate_cmd) return run_evaluate(ev, out);
    if (*render) return run_render(rd, out);
    if (*encgeom) return run_encgeom(eg, out);
    if (*stats) return run_stats(st, out);
  } catch (const ConfigError& e) {
    err << "error[" << e.kind() << "]: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error[" << e.kind() << "]: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << "\n";
    return kData;
  }
  err << app.help();
  return kUsage;
}

}  // namespace planksynth::cli
