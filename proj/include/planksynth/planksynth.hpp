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

// Umbrella header.

#pragma once

#include "planksynth/dataset_io.hpp"
#include "planksynth/encgeom.hpp"
#include "planksynth/errors.hpp"
#include "planksynth/evaluator.hpp"
#include "planksynth/mask.hpp"
#include "planksynth/pcigen.hpp"
#include "planksynth/png_io.hpp"
#include "planksynth/raster.hpp"
#include "planksynth/remap.hpp"
#include "planksynth/render.hpp"
#include "planksynth/rng.hpp"
#include "planksynth/stats.hpp"
#include "planksynth/taxonomy.hpp"
#include "planksynth/tiler.hpp"
