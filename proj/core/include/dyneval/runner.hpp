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

// Dataset-level scoring on top of the stage cache: one run configuration,
// one pipeline, final scores memoized per video under the full config.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyneval/background.hpp"
#include "dyneval/camera_motion.hpp"
#include "dyneval/foreground.hpp"
#include "dyneval/manifest.hpp"
#include "dyneval/pipeline.hpp"

namespace dyneval {

// Run config file:
//   {"backends": {...}, "background": {...}, "foreground": {...},
//    "camera_grid": 16, "max_in_flight": 4}
struct RunConfig {
  nlohmann::json backends = nlohmann::json::object();
  BackgroundConfig background;
  TrackerFGConfig foreground;
  int camera_grid = 16;
  int max_in_flight = 4;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

class DatasetRunner {
 public:
  // `cache_dir` may be empty (no caching).
  DatasetRunner(const DatasetManifest& manifest, const RunConfig& cfg,
                const std::filesystem::path& cache_dir);
  // Uses an explicit backend set instead of cfg.backends.
  DatasetRunner(const DatasetManifest& manifest, const RunConfig& cfg,
                backends::BackendSet backends, std::shared_ptr<Cache> cache);

  // Passing `details` or `tracks` skips the score memo so the intermediate
  // results can be filled in.
  BackgroundScore background(const VideoRecord& video, MsDebiasResult* details = nullptr);
  ForegroundScore foreground(const VideoRecord& video, std::vector<TrackSet>* tracks = nullptr);
  CameraMotionResult camera_motion(const VideoRecord& video);

  std::map<std::string, BackgroundScore> background_all();
  std::map<std::string, ForegroundScore> foreground_all();
  std::vector<CameraMotionResult> camera_motion_all();

  // Replaces decoding from the manifest uris (e.g. in-memory renders).
  using FrameSource = std::function<FrameSequence(const VideoRecord&)>;
  void set_frame_source(FrameSource source) { source_ = std::move(source); }

  Pipeline& pipeline() { return pipeline_; }
  const RunConfig& config() const { return cfg_; }

 private:
  const FrameSequence& frames(const VideoRecord& video);
  nlohmann::json score_key(const char* metric, const VideoRecord& video) const;
  std::string prompt_text(const VideoRecord& video) const;

  const DatasetManifest& manifest_;
  RunConfig cfg_;
  Pipeline pipeline_;
  FrameSource source_;
  std::string decoded_id_;
  FrameSequence decoded_;
};

}  // namespace dyneval
