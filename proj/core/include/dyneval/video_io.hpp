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

#include <filesystem>

#include "dyneval/types.hpp"

namespace dyneval {

// YUV4MPEG2 streams. The writer emits full-range BT.601 4:4:4 (tagged
// XCOLORRANGE=FULL); the reader accepts 4:4:4 and 4:2:0 variants in either
// range. Any truncation raises IoError and no frames are returned.
FrameSequence read_y4m(const std::filesystem::path& path);
void write_y4m(const std::filesystem::path& path, const FrameSequence& frames,
               double fps);

// Decodes the video file. .y4m is handled natively; every other container is
// handed to OpenCV's video backend. Throws IoError for unreadable files and
// InvalidInput when the decoded frame count or extent disagrees with the
// record (stale manifest).
FrameSequence decode_video(const VideoRecord& record,
                           const std::filesystem::path& resolved_uri);

// Writes an error map as a false-colour PNG, scaled so that `max_value` maps to
// the top of the colour ramp.
void write_heatmap_png(const std::filesystem::path& path, const Plane& values,
                       float max_value);

}  // namespace dyneval
