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

// Deterministic synthetic scenes with analytically known frames, masks and
// point tracks, plus oracle backends built on them.
//
// Coordinates: pixel (row i, column j) has its centre at (x = j, y = i).

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyneval/backends.hpp"
#include "dyneval/types.hpp"

namespace dyneval::synthetic {

enum class Shape { disc, rect };

struct Sprite {
  std::string name;
  Shape shape = Shape::disc;
  double half_width = 8.0;   // disc radius, or rect half extent along x
  double half_height = 8.0;  // rect half extent along y
  std::array<std::uint8_t, 3> color{220, 60, 40};
  Point2 start{32.0, 32.0};  // centre at frame 0
  Point2 velocity{0.0, 0.0};  // px / frame
  double rotation_rate = 0.0;  // rad / frame
  // Smooth non-rigid wobble: local point u is displaced by
  // a * (sin(omega t + kappa u_y + phase), cos(omega t + kappa u_x + phase)).
  // a * kappa must stay below 1 so the warp remains invertible.
  double deformation_amplitude = 0.0;
  double deformation_frequency = 1.5707963267948966;  // rad / frame
  double deformation_wavenumber = 0.2;                 // rad / px
  double deformation_phase = 0.0;
};

// Screen-fixed rectangle drawn above every sprite; covers x0 <= j < x1,
// y0 <= i < y1.
struct Occluder {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::array<std::uint8_t, 3> color{20, 20, 20};
};

// Localized background distortion: `amplitude` is added to the background
// under the rectangle on odd frames.
struct Flicker {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int amplitude = 40;
};

struct SyntheticScene {
  std::uint64_t seed = 0;
  int width = 64;
  int height = 64;
  int frames = 16;
  // Camera translation per frame (background appears to move by -dx).
  int camera_dx = 0;
  int camera_dy = 0;
  // Explicit per-frame camera offsets; overrides dx/dy when non-empty.
  std::vector<std::pair<int, int>> camera_path;
  int texture_period = 32;
  std::vector<Sprite> sprites;
  std::vector<Occluder> occluders;
  std::optional<Flicker> flicker;
};

std::pair<int, int> camera_offset(const SyntheticScene& scene, int frame);

// Throws InvalidInput when frames < 3 or a sprite leaves the frame.
FrameSequence render_synthetic_scene(const SyntheticScene& scene);

// Ownership labels per pixel: -1 background, s for sprite s, and
// kOccluderLabel + k for occluder k.
constexpr int kOccluderLabel = 1000;
Image<int> label_map(const SyntheticScene& scene, int frame);

// Visible raster of every sprite on every frame (oracle_masks).
std::vector<MaskSequence> oracle_masks(const SyntheticScene& scene);
// Sprites followed by occluders: the class-agnostic object set.
std::vector<MaskSequence> oracle_object_masks(const SyntheticScene& scene);

// Analytic trajectories of query points given at start_frame. Points on a
// sprite follow its motion and deformation, occluder points stay put, and
// background points move with the camera. A point is invisible when outside
// the frame or when the pixel it rounds to belongs to an occluder or a sprite
// drawn above its owner. Throws InvalidInput for queries outside the frame.
TrackSet oracle_tracks(const SyntheticScene& scene, int start_frame,
                       std::span<const Point2> queries);

// True frame i (level 0). The oracle interpolator returns pyramid levels of it.
RgbFrame oracle_interpolate(const SyntheticScene& scene, int frame_index);

// Knobs for random scene generation used by tests and the `synth` command.
struct SceneOptions {
  int width = 64;
  int height = 64;
  int frames = 16;
  int camera_dx = 2;
  int camera_dy = 0;
  int sprite_count = 1;
  double sprite_radius = 8.0;
  double sprite_speed = 1.0;
  double rotation_rate = 0.0;
  double deformation_amplitude = 0.0;
  bool with_occluder = false;
};

SyntheticScene make_scene(std::uint64_t seed, const SceneOptions& options);

// --- Oracle backends -------------------------------------------------------

class OracleInterpolator : public backends::Interpolator {
 public:
  explicit OracleInterpolator(SyntheticScene scene);
  std::string id() const override;
  RgbFrame interpolate(const backends::InterpolationRequest& request) override;

 private:
  SyntheticScene scene_;
  std::mutex mutex_;
  std::vector<FrameSequence> pyramid_;
};

class OracleSegmenter : public backends::AutoSegmenter {
 public:
  explicit OracleSegmenter(SyntheticScene scene) : scene_(std::move(scene)) {}
  std::string id() const override { return "oracle-segmenter"; }
  std::vector<Mask> segment(std::string_view video_id, const RgbFrame& frame) override;

 private:
  SyntheticScene scene_;
};

// Matches each initial region to the scene object it overlaps most at the
// start frame and returns that object's visible rasters.
class OraclePropagator : public backends::MaskPropagator {
 public:
  explicit OraclePropagator(SyntheticScene scene) : scene_(std::move(scene)) {}
  std::string id() const override { return "oracle-propagator"; }
  std::vector<MaskSequence> propagate(std::string_view video_id,
                                      const FrameSequence& frames, int start_frame,
                                      std::span<const Mask> initial_regions) override;

 private:
  SyntheticScene scene_;
};

// Phrases equal to a sprite name ground to that sprite's bounding box on
// frame 0 with confidence 0.9; other phrases find nothing.
class OracleGrounder : public backends::Grounder {
 public:
  explicit OracleGrounder(SyntheticScene scene) : scene_(std::move(scene)) {}
  std::string id() const override { return "oracle-grounder"; }
  std::vector<backends::GroundedPhrase> ground(std::string_view video_id,
                                               const RgbFrame& reference,
                                               std::span<const std::string> phrases) override;

 private:
  SyntheticScene scene_;
};

class OracleTracker : public backends::PointTracker {
 public:
  explicit OracleTracker(SyntheticScene scene) : scene_(std::move(scene)) {}
  std::string id() const override { return "oracle-tracker"; }
  TrackSet track(std::string_view video_id, const FrameSequence& frames, int start_frame,
                 std::span<const Point2> queries) override;

 private:
  SyntheticScene scene_;
};

// Returns a fixed phrase list for every prompt, or a per-prompt list.
class ScriptedPhraseExtractor : public backends::PhraseExtractor {
 public:
  explicit ScriptedPhraseExtractor(std::vector<backends::TaggedPhrase> phrases)
      : default_(std::move(phrases)) {}
  ScriptedPhraseExtractor(std::map<std::string, std::vector<backends::TaggedPhrase>> by_prompt,
                          std::vector<backends::TaggedPhrase> fallback = {})
      : by_prompt_(std::move(by_prompt)), default_(std::move(fallback)) {}
  std::string id() const override { return "scripted-extractor"; }
  std::vector<backends::TaggedPhrase> extract(std::string_view prompt) override;

 private:
  std::map<std::string, std::vector<backends::TaggedPhrase>> by_prompt_;
  std::vector<backends::TaggedPhrase> default_;
};

// Oracle backends for one scene. Every sprite is reported as a dynamic
// object phrase; embedders are the local thumbnail embedder.
backends::BackendSet oracle_backends(const SyntheticScene& scene);

}  // namespace dyneval::synthetic
