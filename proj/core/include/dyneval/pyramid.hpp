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

#include <vector>

#include "dyneval/types.hpp"

namespace dyneval {

// One pyramid step: separable (1,4,6,4,1)/16 blur with reflect-101 borders,
// then keep every second row and column starting at 0. The result has extent
// ((w + 1) / 2, (h + 1) / 2).
RgbFrame pyr_down(const RgbFrame& frame);
Plane pyr_down(const Plane& plane);

// Levels 0..levels-1 of the frame pyramid; level 0 is the input.
std::vector<FrameSequence> video_pyramid(const FrameSequence& frames, int levels);

// Applies pyr_down `steps` times to the mask viewed as a {0,1} float field and
// thresholds the result at 0.5.
Mask downscale_mask(const Mask& mask, int steps);

// Largest level count <= requested for which the coarsest level keeps
// min(width, height) >= min_extent. Returns at least 1.
int feasible_levels(int width, int height, int requested, int min_extent = 8);

// Extent after `steps` pyr_down calls.
int level_extent(int extent, int steps);

}  // namespace dyneval
