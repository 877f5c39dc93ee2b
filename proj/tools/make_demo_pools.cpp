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

// Writes a procedural source set (taxonomy, backgrounds, individuals) that
// `planksynth generate` can consume.

#include <CLI11.hpp>

#include <iostream>

#include "planksynth/demo.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write procedural background and individual pools", "make_demo_pools"};
  std::string out;
  planksynth::demo::PoolSpec spec;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--families", spec.families, "Number of families (max 16)");
  app.add_option("--per-family", spec.per_family, "Individuals per family");
  app.add_option("--backgrounds", spec.backgrounds, "Number of backgrounds");
  app.add_option("--width", spec.background_width, "Background width");
  app.add_option("--height", spec.background_height, "Background height");
  app.add_option("--channels", spec.channels, "1 or 3");
  app.add_option("--seed", spec.seed, "Seed");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto pools = planksynth::demo::make_pools(spec);
    planksynth::demo::write_pools(out, pools, planksynth::demo::taxonomy());
    std::cout << "wrote " << pools.individuals.size() << " individuals and " << pools.backgrounds.size()
              << " backgrounds to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
