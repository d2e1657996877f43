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

#include <cstdint>
#include <string>
#include <vector>

#include "dyneval/image.hpp"

namespace dyneval {

struct VideoRecord {
  std::string video_id;
  std::string model_id;
  std::string prompt_id;
  int generation_index = 0;
  int frame_count = 0;
  int width = 0;
  int height = 0;
  double fps = 0.0;
  std::string source_uri;

  bool operator==(const VideoRecord&) const = default;
};

// Decoded frames of one video. All frames share the same extent.
struct FrameSequence {
  std::vector<RgbFrame> frames;

  int size() const { return static_cast<int>(frames.size()); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  const RgbFrame& operator[](int i) const { return frames[i]; }
};

// Per-frame masks of one object (or one mask family), indexed by frame.
using MaskSequence = std::vector<Mask>;

struct ErrorMap {
  int frame_index = 0;
  Plane values;  // nonnegative, intensity units
};

struct ErrorMapStack {
  std::vector<ErrorMap> maps;

  bool empty() const { return maps.empty(); }
  int size() const { return static_cast<int>(maps.size()); }
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

struct Track {
  std::vector<Point2> positions;       // one per frame
  std::vector<std::uint8_t> visible;   // one per frame, {0,1}

  int frames() const { return static_cast<int>(positions.size()); }
  bool is_visible(int f) const { return visible[f] != 0; }
};

struct TrackSet {
  int object_index = 0;
  std::vector<Track> tracks;

  int size() const { return static_cast<int>(tracks.size()); }
  int frames() const { return tracks.empty() ? 0 : tracks.front().frames(); }
};

// Throws InvalidInput if trajectories disagree in length or a visible point
// is not finite.
void validate_track_set(const TrackSet& tracks);

}  // namespace dyneval
