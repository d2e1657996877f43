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

// Lightweight non-learned backends that run in-process. They stand in for the
// production models in demos and tests; none of them is a model of human
// perception.

#include <string>

#include "dyneval/backends.hpp"

namespace dyneval::backends {

// Returns the previous frame unchanged.
class HoldInterpolator : public Interpolator {
 public:
  std::string id() const override { return "hold"; }
  RgbFrame interpolate(const InterpolationRequest& request) override;
};

// Estimates one global integer translation s between the previous and next
// frame by exhaustive search over [-radius, radius]^2 (mean absolute
// difference over the overlap), then predicts
//   0.5 * previous(p - s/2) + 0.5 * next(p + s/2)
// with bilinear sampling and edge clamping. Exact for a camera translating by
// an even number of pixels per frame pair over a static scene; fails around
// independently moving objects and their occlusion boundaries.
class ShiftBlendInterpolator : public Interpolator {
 public:
  explicit ShiftBlendInterpolator(int search_radius = 8) : radius_(search_radius) {}
  std::string id() const override;
  RgbFrame interpolate(const InterpolationRequest& request) override;

  // Exposed for tests.
  static std::pair<int, int> estimate_shift(const RgbFrame& previous,
                                            const RgbFrame& next, int radius);

 private:
  int radius_;
};

// Frame -> mean colour of each cell of a grid x grid partition, optionally
// centred (per-vector mean removed), then L2-normalized. A frame whose vector
// vanishes maps to the first basis vector.
class ThumbnailEmbedder : public Embedder {
 public:
  explicit ThumbnailEmbedder(int grid = 4, bool centered = true)
      : grid_(grid), centered_(centered) {}
  std::string id() const override;
  std::vector<Embedding> embed(std::string_view video_id,
                               const FrameSequence& frames) override;

 private:
  int grid_;
  bool centered_;
};

}  // namespace dyneval::backends
