// Copyright 2026 The DynEval Authors.
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

// A complete synthetic benchmark: manifest, rendered videos, simulated
// human votes, and an oracle-warmed stage cache that replays without any
// backend. Model m degrades its videos with background flicker and sprite
// deformation that grow with m, so every metric has a known ground truth.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dyneval/harness.hpp"
#include "dyneval/manifest.hpp"
#include "dyneval/runner.hpp"
#include "dyneval/synthetic.hpp"

namespace dyneval::synthetic {

struct DatasetOptions {
  int models = 4;
  int prompts = 6;
  int generations = 3;
  std::uint64_t seed = 0;
  int width = 96;
  int height = 96;
  int frames = 16;
  double static_fraction = 0.1;  // exactly round(fraction * videos) get a still camera
  int annotators = 3;
  double max_flicker = 48.0;      // intensity units, worst model
  double max_deformation = 3.0;   // px, worst model
  double vote_noise = 1.0;        // scales the logistic temperature of simulated raters
};

struct VideoPlan {
  SyntheticScene scene;
  double flicker = 0;      // injected amplitude
  double deformation = 0;  // sprite wobble amplitude
  bool is_static = false;
};

struct SyntheticDataset {
  DatasetOptions options;
  DatasetManifest manifest;
  std::map<std::string, VideoPlan> plans;  // video id -> scene
  PairSet pairs;
  std::vector<Annotation> annotations;
};

// Pure planning, no I/O. Videos are named m<model>-p<prompt>-g<generation>.
SyntheticDataset plan_dataset(const DatasetOptions& options);

// Writes <dir>/videos/*.y4m, manifest.json and annotations.json.
void write_dataset(const SyntheticDataset& dataset, const std::filesystem::path& dir);

// Scores every video with its oracle backends (shift-and-blend
// interpolation) through `cache_dir` and returns
// a copy of `base` whose backends replay the oracle ids, so later runs are
// served entirely from the cache.
RunConfig warm_oracle_cache(const SyntheticDataset& dataset, const std::filesystem::path& cache_dir,
                            const RunConfig& base = {});

}  // namespace dyneval::synthetic
