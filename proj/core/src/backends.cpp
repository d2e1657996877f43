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

#include "dyneval/backends.hpp"

#include <algorithm>
#include <cmath>

#include "dyneval/error.hpp"

namespace dyneval::backends {

namespace {
constexpr double kUnitTolerance = 1e-5;
}

void check_interpolation(const InterpolationRequest& request, const RgbFrame& output) {
  if (!output.same_shape(request.previous)) {
    throw BackendError("interpolator returned a frame of a different shape for frame " +
                       std::to_string(request.frame_index) + " of '" +
                       std::string(request.video_id) + "'");
  }
}

void check_embeddings(const FrameSequence& frames, const std::vector<Embedding>& out) {
  if (static_cast<int>(out.size()) != frames.size()) {
    throw BackendError("embedder returned " + std::to_string(out.size()) +
                       " embeddings for " + std::to_string(frames.size()) + " frames");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].empty() || out[i].size() != out.front().size()) {
      throw BackendError("embedder output dimension is not constant");
    }
    double norm = 0;
    for (float v : out[i]) norm += static_cast<double>(v) * v;
    if (std::abs(std::sqrt(norm) - 1.0) > kUnitTolerance) {
      throw BackendError("embedding " + std::to_string(i) + " is not unit length");
    }
  }
}

void check_grounding(const RgbFrame& reference, std::span<const std::string> phrases,
                     const std::vector<GroundedPhrase>& out) {
  if (out.size() != phrases.size()) {
    throw BackendError("grounder must answer once per phrase");
  }
  const double w = reference.width();
  const double h = reference.height();
  for (const auto& g : out) {
    for (const auto& b : g.boxes) {
      const bool inside = b.x0 >= 0 && b.y0 >= 0 && b.x1 <= w && b.y1 <= h &&
                          b.x0 <= b.x1 && b.y0 <= b.y1;
      if (!inside) throw BackendError("grounder box for '" + g.phrase + "' leaves the frame");
      if (!(b.confidence >= 0.0 && b.confidence <= 1.0)) {
        throw BackendError("grounder confidence outside [0,1] for '" + g.phrase + "'");
      }
    }
  }
}

void check_propagation(const FrameSequence& frames, std::size_t objects,
                       const std::vector<MaskSequence>& out) {
  if (out.size() != objects) {
    throw BackendError("mask propagator returned " + std::to_string(out.size()) +
                       " objects, expected " + std::to_string(objects));
  }
  for (const auto& seq : out) {
    if (static_cast<int>(seq.size()) != frames.size()) {
      throw BackendError("mask propagator must return one mask per frame");
    }
    for (const auto& m : seq) {
      if (m.width() != frames.width() || m.height() != frames.height() ||
          m.channels() != 1) {
        throw BackendError("propagated mask extent differs from the frame");
      }
      for (auto v : m.pixels()) {
        if (v > 1) throw BackendError("propagated mask holds values outside {0,1}");
      }
    }
  }
}

void check_tracks(const FrameSequence& frames, int start_frame,
                  std::span<const Point2> queries, const TrackSet& out) {
  if (static_cast<std::size_t>(out.size()) != queries.size()) {
    throw BackendError("tracker returned " + std::to_string(out.size()) +
                       " trajectories for " + std::to_string(queries.size()) + " queries");
  }
  try {
    validate_track_set(out);
  } catch (const InvalidInput& e) {
    throw BackendError(std::string("tracker output: ") + e.what());
  }
  for (std::size_t p = 0; p < queries.size(); ++p) {
    const Track& t = out.tracks[p];
    if (t.frames() != frames.size()) {
      throw BackendError("tracker trajectory length differs from the frame count");
    }
    if (!(t.positions[start_frame] == queries[p])) {
      throw BackendError("tracker moved query " + std::to_string(p) +
                         " at its start frame");
    }
  }
}

void check_phrases(const std::vector<TaggedPhrase>& out) {
  for (const auto& p : out) {
    if (p.phrase.empty()) throw BackendError("phrase extractor returned an empty phrase");
  }
}

std::string_view to_string(MotionTag tag) {
  return tag == MotionTag::static_object ? "static" : "dynamic";
}

MotionTag motion_tag_from_string(std::string_view name) {
  if (name == "static") return MotionTag::static_object;
  if (name == "dynamic") return MotionTag::dynamic_object;
  throw InvalidInput("motion tag must be 'static' or 'dynamic', got '" +
                     std::string(name) + "'");
}

Mask box_mask(const Box& box, int width, int height) {
  Mask m = make_mask(width, height);
  const int x0 = std::clamp(static_cast<int>(std::ceil(box.x0)), 0, width);
  const int y0 = std::clamp(static_cast<int>(std::ceil(box.y0)), 0, height);
  const int x1 = std::clamp(static_cast<int>(std::ceil(box.x1)), 0, width);
  const int y1 = std::clamp(static_cast<int>(std::ceil(box.y1)), 0, height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m(y, x) = 1;
  }
  return m;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw InvalidInput("cosine: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace dyneval::backends
