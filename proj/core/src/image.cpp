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

#include "dyneval/image.hpp"

#include <cmath>

#include "dyneval/error.hpp"
#include "dyneval/types.hpp"

namespace dyneval {

Mask mask_union(const Mask& a, const Mask& b) {
  if (!a.same_extent(b)) throw InvalidInput("mask_union: extent mismatch");
  Mask out = make_mask(a.width(), a.height());
  auto pa = a.pixels();
  auto pb = b.pixels();
  auto po = out.pixels();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = (pa[i] | pb[i]) ? 1 : 0;
  return out;
}

void validate_track_set(const TrackSet& tracks) {
  if (tracks.tracks.empty()) return;
  const int frames = tracks.tracks.front().frames();
  for (std::size_t p = 0; p < tracks.tracks.size(); ++p) {
    const Track& t = tracks.tracks[p];
    if (t.frames() != frames || static_cast<int>(t.visible.size()) != frames) {
      throw InvalidInput("track " + std::to_string(p) +
                         " has a trajectory length different from track 0");
    }
    for (int f = 0; f < frames; ++f) {
      if (t.visible[f] > 1) {
        throw InvalidInput("track " + std::to_string(p) +
                           ": visibility flag outside {0,1}");
      }
      if (t.visible[f] && !(std::isfinite(t.positions[f].x) &&
                            std::isfinite(t.positions[f].y))) {
        throw InvalidInput("track " + std::to_string(p) +
                           ": non-finite coordinate on a visible frame");
      }
    }
  }
}

}  // namespace dyneval
