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

// Camera-motion magnitude from whole-frame point tracks and the percentile
// split into static and dynamic videos.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyneval/types.hpp"

namespace dyneval {

class Pipeline;

struct CameraMotionResult {
  std::string video_id;
  double c_cam = 0;  // px^2
};

// Uniform n x n grid of pixel centres covering the frame.
std::vector<Point2> grid_queries(int width, int height, int n = 16);

// Mean over tracks of Var(x) + Var(y), population variance over the frames
// where the position is finite. Visibility flags are ignored: a grid point
// that leaves the frame still carries the camera signal.
double camera_motion_metric(const TrackSet& tracks);

// Linear interpolation between order statistics (type 7). q in [0, 100].
double percentile(std::span<const double> values, double q);

struct StaticSplit {
  double tau_cam = 0;
  double percentile = 10;
  bool degenerate = false;       // all values equal; everything is dynamic
  std::vector<bool> is_static;   // parallel to the input
};

StaticSplit classify_static(std::span<const CameraMotionResult> results, double percentile = 10);

// Tracks a 16 x 16 grid from frame 0 through the stage cache.
CameraMotionResult camera_motion_for_video(Pipeline& pipeline, std::string_view video_id,
                                           const FrameSequence& frames, int grid = 16);

nlohmann::json to_json(const CameraMotionResult& r);

}  // namespace dyneval
