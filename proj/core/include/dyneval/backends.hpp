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

// Interfaces for every learned component the metrics consume. Production
// adapters talk to external model processes (see external.hpp); tests use the
// synthetic-scene oracles (synthetic.hpp) and the recorded-replay wrappers
// (recording.hpp).
//
// Each backend reports an id(). Ids enter the cache keys of every artifact the
// backend produces, so two backends with equal ids must produce equal outputs.

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dyneval/types.hpp"

namespace dyneval::backends {

struct InterpolationRequest {
  std::string_view video_id;
  int level = 0;        // pyramid level of the frames, 0 = native resolution
  int frame_index = 0;  // index of the frame to predict
  const RgbFrame& previous;
  const RgbFrame& next;
};

// (frame t-1, frame t+1) -> predicted frame t.
class Interpolator {
 public:
  virtual ~Interpolator() = default;
  virtual std::string id() const = 0;
  virtual RgbFrame interpolate(const InterpolationRequest& request) = 0;
};

using Embedding = std::vector<float>;

// frame -> unit-length vector of fixed dimension.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual std::vector<Embedding> embed(std::string_view video_id,
                                       const FrameSequence& frames) = 0;
};

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // pixel coordinates, x1/y1 exclusive
  double confidence = 0;
};

struct GroundedPhrase {
  std::string phrase;
  std::vector<Box> boxes;
};

// (reference frame, phrases) -> boxes per phrase.
class Grounder {
 public:
  virtual ~Grounder() = default;
  virtual std::string id() const = 0;
  virtual std::vector<GroundedPhrase> ground(std::string_view video_id,
                                             const RgbFrame& reference,
                                             std::span<const std::string> phrases) = 0;
};

// (frames, one initial region per object at start_frame) -> per-frame masks
// per object.
class MaskPropagator {
 public:
  virtual ~MaskPropagator() = default;
  virtual std::string id() const = 0;
  virtual std::vector<MaskSequence> propagate(std::string_view video_id,
                                              const FrameSequence& frames,
                                              int start_frame,
                                              std::span<const Mask> initial_regions) = 0;
};

// Class-agnostic object proposals on one frame (the automatic mask generator
// whose propagated outputs feed the edge maps).
class AutoSegmenter {
 public:
  virtual ~AutoSegmenter() = default;
  virtual std::string id() const = 0;
  virtual std::vector<Mask> segment(std::string_view video_id, const RgbFrame& frame) = 0;
};

// (frames, query points at start_frame) -> one trajectory per query.
class PointTracker {
 public:
  virtual ~PointTracker() = default;
  virtual std::string id() const = 0;
  virtual TrackSet track(std::string_view video_id, const FrameSequence& frames,
                         int start_frame, std::span<const Point2> queries) = 0;
};

enum class MotionTag { static_object, dynamic_object };

struct TaggedPhrase {
  std::string phrase;
  MotionTag tag = MotionTag::dynamic_object;

  bool operator==(const TaggedPhrase&) const = default;
};

// prompt text -> object mentions tagged static or dynamic.
class PhraseExtractor {
 public:
  virtual ~PhraseExtractor() = default;
  virtual std::string id() const = 0;
  virtual std::vector<TaggedPhrase> extract(std::string_view prompt) = 0;
};

struct BackendSet {
  std::shared_ptr<Interpolator> interpolator;
  std::shared_ptr<Embedder> scene_embedder;
  std::shared_ptr<Embedder> object_embedder;
  std::shared_ptr<Grounder> grounder;
  std::shared_ptr<MaskPropagator> propagator;
  std::shared_ptr<AutoSegmenter> segmenter;
  std::shared_ptr<PointTracker> tracker;
  std::shared_ptr<PhraseExtractor> extractor;
};

// Contract checks applied to every backend output. Each throws BackendError
// describing the violated invariant.
void check_interpolation(const InterpolationRequest& request, const RgbFrame& output);
void check_embeddings(const FrameSequence& frames, const std::vector<Embedding>& out);
void check_grounding(const RgbFrame& reference, std::span<const std::string> phrases,
                     const std::vector<GroundedPhrase>& out);
void check_propagation(const FrameSequence& frames, std::size_t objects,
                       const std::vector<MaskSequence>& out);
void check_tracks(const FrameSequence& frames, int start_frame,
                  std::span<const Point2> queries, const TrackSet& out);
void check_phrases(const std::vector<TaggedPhrase>& out);

std::string_view to_string(MotionTag tag);
MotionTag motion_tag_from_string(std::string_view name);

// Rasterizes a box (clamped to the frame) as a mask of the given extent.
Mask box_mask(const Box& box, int width, int height);

// Cosine similarity of two equal-length vectors.
double cosine(std::span<const float> a, std::span<const float> b);

}  // namespace dyneval::backends
