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

#include "dyneval/morphology.hpp"

#include <algorithm>
#include <vector>

#include "dyneval/error.hpp"

namespace dyneval {

namespace {

void check_side(int side) {
  if (side < 1 || side % 2 == 0) {
    throw InvalidInput("structuring element side must be odd and positive");
  }
}

// Sliding max (dilate) or min (erode) along rows then columns. Out-of-range
// samples are 0, which never raises a max and always forces a min to 0.
Mask separable(const Mask& in, int side, bool is_max) {
  check_side(side);
  const int r = side / 2;
  const int w = in.width();
  const int h = in.height();
  Mask tmp = make_mask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t acc = is_max ? 0 : 1;
      for (int dx = -r; dx <= r; ++dx) {
        const int xx = x + dx;
        const std::uint8_t v = (xx >= 0 && xx < w) ? in(y, xx) : 0;
        acc = is_max ? std::max(acc, v) : std::min(acc, v);
      }
      tmp(y, x) = acc;
    }
  }
  Mask out = make_mask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t acc = is_max ? 0 : 1;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = y + dy;
        const std::uint8_t v = (yy >= 0 && yy < h) ? tmp(yy, x) : 0;
        acc = is_max ? std::max(acc, v) : std::min(acc, v);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

}  // namespace

Mask dilate(const Mask& mask, int side) { return separable(mask, side, true); }

Mask erode(const Mask& mask, int side) { return separable(mask, side, false); }

Mask morphological_gradient(const Mask& mask, int side) {
  const Mask d = dilate(mask, side);
  const Mask e = erode(mask, side);
  Mask out = make_mask(mask.width(), mask.height());
  auto po = out.pixels();
  auto pd = d.pixels();
  auto pe = e.pixels();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = (pd[i] && !pe[i]) ? 1 : 0;
  return out;
}

}  // namespace dyneval
