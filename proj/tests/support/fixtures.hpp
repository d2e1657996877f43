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

// Shared builders for tests: manifests of a given shape, random track sets
// and small rasters.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "dyneval/manifest.hpp"
#include "dyneval/types.hpp"

namespace dyneval::testing {

inline DatasetManifest grid_manifest(int models, int prompts, int generations, int frames = 16,
                                     int width = 64, int height = 64) {
  std::vector<std::string> model_ids;
  for (int m = 0; m < models; ++m) model_ids.push_back(fmt::format("model{:02d}", m));
  std::vector<PromptEntry> ps;
  std::vector<VideoRecord> vs;
  for (int p = 0; p < prompts; ++p) {
    const std::string pid = fmt::format("p{:04d}", p);
    ps.push_back({pid, "a dog runs through an auto factory, dolly shot", {}});
    for (int m = 0; m < models; ++m) {
      for (int g = 0; g < generations; ++g) {
        VideoRecord v;
        v.video_id = fmt::format("v-{}-{}-{}", m, p, g);
        v.model_id = model_ids[static_cast<std::size_t>(m)];
        v.prompt_id = pid;
        v.generation_index = g;
        v.frame_count = frames;
        v.width = width;
        v.height = height;
        v.fps = 8;
        v.source_uri = "videos/" + v.video_id + ".y4m";
        vs.push_back(std::move(v));
      }
    }
  }
  return DatasetManifest(std::move(model_ids), std::move(ps), std::move(vs));
}

inline TrackSet random_tracks(std::mt19937_64& rng, int points, int frames, double spread = 50.0,
                              double visible_p = 1.0) {
  std::uniform_real_distribution<double> u(0.0, spread);
  std::bernoulli_distribution vis(visible_p);
  TrackSet t;
  for (int p = 0; p < points; ++p) {
    Track tr;
    for (int f = 0; f < frames; ++f) {
      tr.positions.push_back({u(rng), u(rng)});
      tr.visible.push_back(vis(rng) ? 1 : 0);
    }
    t.tracks.push_back(std::move(tr));
  }
  return t;
}

inline Mask random_mask(std::mt19937_64& rng, int w, int h, double p = 0.3) {
  std::bernoulli_distribution b(p);
  Mask m = make_mask(w, h);
  for (auto& v : m.pixels()) v = b(rng) ? 1 : 0;
  return m;
}

inline Plane random_plane(std::mt19937_64& rng, int w, int h, float hi = 255.0f) {
  std::uniform_real_distribution<float> u(0.0f, hi);
  Plane p(w, h);
  for (auto& v : p.pixels()) v = u(rng);
  return p;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            fmt::format("dyneval-{}-{:x}", tag, (static_cast<unsigned long long>(rd()) << 32) | rd());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace dyneval::testing
