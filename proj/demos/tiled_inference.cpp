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

// Synthesizes one large crowded image in memory, cuts it into overlapping
// tiles, treats each tile's ground truth as a detector's output, stitches
// the tiles back together and scores the result.
//
//   tiled_inference [width] [height]

#include <cstdio>
#include <cstdlib>

#include "planksynth/demo.hpp"
#include "planksynth/planksynth.hpp"

using namespace planksynth;

int main(int argc, char** argv) {
  PciConfig cfg;
  cfg.canvas_width = argc > 1 ? std::atoi(argv[1]) : 3000;
  cfg.canvas_height = argc > 2 ? std::atoi(argv[2]) : 2000;
  cfg.count_range = {40, 60};
  cfg.seed = 11;

  demo::PoolSpec spec;
  spec.max_individual_extent = 240;
  const SourcePools pools = demo::make_pools(spec);
  const Pci pci = synthesize(sample_recipe(cfg, pools, 0), cfg, pools);

  AnnotationSet gt;
  gt.images = {{1, "scene.png", cfg.canvas_width, cfg.canvas_height, {}}};
  gt.categories = {{1, "plankton", Rank::Class, {}}};
  for (const auto& l : pci.labels) {
    gt.annotations.push_back(make_annotation(static_cast<std::int64_t>(gt.annotations.size()) + 1, 1, 1, l.mask));
  }

  const TilePlan plan = plan_tiles(cfg.canvas_width, cfg.canvas_height);
  DetectionSet lifted;
  for (std::size_t t = 0; t < plan.tiles.size(); ++t) {
    const TileOrigin o = plan.tiles[t];
    DetectionSet per_tile;
    for (const auto& l : pci.labels) {
      const InstanceMask local = reframe(l.mask, -o.x, -o.y, plan.tile, plan.tile);
      if (!local.empty()) per_tile.detections.push_back({std::nullopt, 1, 1, local.rle(), 1.0, static_cast<int>(t), {}});
    }
    for (auto& d : lift_detections(per_tile, o, plan.image_width, plan.image_height).detections) {
      lifted.detections.push_back(std::move(d));
    }
  }

  MergeConfig plain;
  plain.seam_aware = false;
  const auto report = [&](const char* name, const DetectionSet& dets) {
    const EvalResult r = evaluate(dets, gt);
    std::printf("%-12s %5zu detections  mAP %.4f  AP50 %.4f\n", name, dets.detections.size(), r.map.value_or(0.0),
                r.ap50.value_or(0.0));
  };
  std::printf("%d x %d, %zu instances, %zu tiles\n", cfg.canvas_width, cfg.canvas_height, gt.annotations.size(),
              plan.tiles.size());
  report("unmerged", lifted);
  report("whole-mask", merge_detections(lifted, plain));
  report("seam-aware", merge_detections(lifted));
  return 0;
}
