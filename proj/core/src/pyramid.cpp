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

#include "dyneval/pyramid.hpp"

#include <algorithm>
#include <cmath>

#include "dyneval/error.hpp"

namespace dyneval {

namespace {

constexpr float kTaps[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};

// Reflect-101: -1 -> 1, n -> n-2.
int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

// Blur + decimate into a float image with the same channel count.
template <typename T>
Plane blur_decimate(const Image<T>& in) {
  const int w = in.width();
  const int h = in.height();
  const int c = in.channels();
  const int ow = (w + 1) / 2;
  const int oh = (h + 1) / 2;
  // Horizontal pass only at the kept columns.
  Plane rows(ow, h, c);
  for (int y = 0; y < h; ++y) {
    for (int ox = 0; ox < ow; ++ox) {
      const int x = 2 * ox;
      for (int ch = 0; ch < c; ++ch) {
        float acc = 0;
        for (int k = -2; k <= 2; ++k) {
          acc += kTaps[k + 2] * static_cast<float>(in(y, reflect101(x + k, w), ch));
        }
        rows(y, ox, ch) = acc;
      }
    }
  }
  Plane out(ow, oh, c);
  for (int oy = 0; oy < oh; ++oy) {
    const int y = 2 * oy;
    for (int ox = 0; ox < ow; ++ox) {
      for (int ch = 0; ch < c; ++ch) {
        float acc = 0;
        for (int k = -2; k <= 2; ++k) {
          acc += kTaps[k + 2] * rows(reflect101(y + k, h), ox, ch);
        }
        out(oy, ox, ch) = acc;
      }
    }
  }
  return out;
}

}  // namespace

RgbFrame pyr_down(const RgbFrame& frame) {
  const Plane f = blur_decimate(frame);
  RgbFrame out(f.width(), f.height(), f.channels());
  auto src = f.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(src[i]), 0L, 255L));
  }
  return out;
}

Plane pyr_down(const Plane& plane) { return blur_decimate(plane); }

std::vector<FrameSequence> video_pyramid(const FrameSequence& frames, int levels) {
  if (levels < 1) throw InvalidInput("video_pyramid: levels must be >= 1");
  std::vector<FrameSequence> pyramid;
  pyramid.reserve(levels);
  pyramid.push_back(frames);
  for (int l = 1; l < levels; ++l) {
    FrameSequence next;
    next.frames.reserve(frames.frames.size());
    for (const auto& f : pyramid.back().frames) next.frames.push_back(pyr_down(f));
    pyramid.push_back(std::move(next));
  }
  return pyramid;
}

Mask downscale_mask(const Mask& mask, int steps) {
  if (steps == 0) return mask;
  Plane field(mask.width(), mask.height());
  auto src = mask.pixels();
  auto dst = field.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] ? 1.0f : 0.0f;
  for (int s = 0; s < steps; ++s) field = pyr_down(field);
  Mask out = make_mask(field.width(), field.height());
  auto fp = field.pixels();
  auto op = out.pixels();
  for (std::size_t i = 0; i < op.size(); ++i) op[i] = fp[i] >= 0.5f ? 1 : 0;
  return out;
}

int level_extent(int extent, int steps) {
  for (int s = 0; s < steps; ++s) extent = (extent + 1) / 2;
  return extent;
}

int feasible_levels(int width, int height, int requested, int min_extent) {
  int levels = std::max(1, requested);
  while (levels > 1 && std::min(level_extent(width, levels - 1),
                                level_extent(height, levels - 1)) < min_extent) {
    --levels;
  }
  return levels;
}

}  // namespace dyneval
