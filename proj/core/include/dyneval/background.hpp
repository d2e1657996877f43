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

// Background consistency: the interpolation-error baseline (VB-MS), the
// debiased multi-scale variant (MS-Debias), the frame-embedding baseline
// (VB-BG) and their combination.
//
// All scores are consistency scores in [0, 1], higher is better.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyneval/backends.hpp"
#include "dyneval/types.hpp"

namespace dyneval {

class Pipeline;

struct EdgeMapConfig {
  int gradient_kernel = 3;
  int dilation_kernel = 9;
  int dilation_iterations = 1;

  void validate() const;
};

struct PyramidConfig {
  // Level 0 is the original resolution, level l is downscaled by 2^l.
  std::vector<double> raw_weights{1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0};
  // Coarsest level must keep min(width, height) >= min_extent.
  int min_extent = 8;

  int levels() const { return static_cast<int>(raw_weights.size()); }
  std::vector<double> normalized_weights() const;
  void validate() const;
};

struct BackgroundConfig {
  EdgeMapConfig edges;
  PyramidConfig pyramid;
  // Grounded boxes below this confidence are discarded; the best remaining
  // box per phrase becomes the object's initial region.
  double grounding_threshold = 0.35;
  // Frames whose unmasked fraction falls below this are left out.
  double min_valid_fraction = 0.05;

  void validate() const;
};

nlohmann::json to_json(const BackgroundConfig& cfg);
BackgroundConfig background_config_from_json(const nlohmann::json& j);

struct BackgroundScore {
  double vb_ms = 0;
  double ms_debias = 0;
  double vb_bg = 0;
  double combined = 0;
  std::vector<double> per_level_errors;  // mean debiased error per level
  std::vector<double> level_weights;     // normalized weights actually used
  double valid_pixel_fraction = 0;       // unmasked share of level-0 pixels
  int objects = 0;                       // grounded foreground objects
};

nlohmann::json to_json(const BackgroundScore& s);
BackgroundScore background_score_from_json(const nlohmann::json& j);

// --- building blocks ---------------------------------------------------------

// E_i = |interp(frame i-1, frame i+1) - frame i|, averaged over channels, for
// odd i. Yields floor((F - 1) / 2) maps.
ErrorMapStack compute_ms_error_maps(const FrameSequence& frames,
                                    backends::Interpolator& interpolator,
                                    std::string_view video_id = {}, int level = 0);

// 1 - mean(E) / 255 over every pixel of every map.
double vb_ms_score(const ErrorMapStack& stack);

// Union over objects of dilate^k(gradient(mask)). `masks` holds one mask per
// object for a single frame; an empty span gives an all-zero map.
Mask compute_edge_map(std::span<const Mask> masks, int width, int height,
                      const EdgeMapConfig& cfg);

// Dynamic-tagged phrases, deduplicated, in first-seen order. An extractor
// failure is logged and yields an empty list.
std::vector<std::string> extract_moving_objects(std::string_view prompt,
                                                backends::PhraseExtractor& extractor);

struct ObjectMasks {
  std::vector<MaskSequence> objects;  // per object, per frame
  MaskSequence unions;                // per frame
};

// Frame-wise union of per-object masks; all zeros when there are no objects.
MaskSequence union_masks(const std::vector<MaskSequence>& objects, int width, int height,
                         int frames);

// Grounds each phrase on frame 0, keeps the best box at or above
// `threshold`, and propagates the boxes through the video.
ObjectMasks compute_object_masks(std::string_view video_id, const FrameSequence& frames,
                                 std::span<const std::string> phrases,
                                 backends::Grounder& grounder,
                                 backends::MaskPropagator& propagator,
                                 double threshold = 0.35);

// Class-agnostic proposals on frame 0 propagated through the video; the
// source of the edge maps.
std::vector<MaskSequence> compute_auto_masks(std::string_view video_id,
                                             const FrameSequence& frames,
                                             backends::AutoSegmenter& segmenter,
                                             backends::MaskPropagator& propagator);

struct DebiasedMap {
  Plane values;
  std::size_t valid_pixels = 0;
  double valid_fraction = 0;
};

// E * (1 - (edges | objects)).
DebiasedMap debias_error_map(const Plane& error, const Mask& edges, const Mask& objects);

struct LevelError {
  double error = 0;             // sum of debiased error / valid pixel count
  std::size_t valid_pixels = 0;
  std::size_t total_pixels = 0;
  int frames_used = 0;
  int frames_excluded = 0;
  bool empty() const { return frames_used == 0; }
};

// Pools debiased maps of one level: frames with valid_fraction below the
// threshold are excluded, the rest contribute sum(E) / sum(valid pixels).
LevelError level_error(const std::vector<DebiasedMap>& maps, double min_valid_fraction);

// sum_l w_l * e_l with the weights normalized to sum to 1.
double aggregate_levels(std::span<const double> errors, std::span<const double> weights);

struct MsDebiasResult {
  double score = 0;
  std::vector<double> per_level_errors;
  std::vector<double> level_weights;
  double valid_pixel_fraction = 0;
  std::vector<ErrorMapStack> debiased;  // per level
};

// Edge maps of pyramid level `level` for every frame: each level-0 object
// mask is taken down with downscale_mask and the edge map rebuilt there.
MaskSequence level_edge_maps(const std::vector<MaskSequence>& auto_masks, int level,
                             int frames, int width, int height, const EdgeMapConfig& cfg);

// Debiasing and aggregation given, per level, the raw error maps and the edge
// maps (indexed by frame), plus the level-0 object unions (indexed by frame),
// which are downscaled per level. Levels whose frames are all excluded are
// dropped and the remaining weights renormalized.
MsDebiasResult ms_debias_from_maps(const std::vector<ErrorMapStack>& level_maps,
                                   const std::vector<MaskSequence>& level_edges,
                                   const MaskSequence& object_unions,
                                   const BackgroundConfig& cfg);

// Mean over consecutive frame pairs of max(0, cosine).
double consecutive_similarity(const std::vector<backends::Embedding>& embeddings);

double vb_bg_score(const FrameSequence& frames, backends::Embedder& scene_embedder,
                   std::string_view video_id = {});

double combined_bg_score(double vb_bg, double ms_debias);

// Full pipeline without caching.
MsDebiasResult ms_debias_score(std::string_view video_id, const FrameSequence& frames,
                               std::string_view prompt, const backends::BackendSet& backends,
                               const BackgroundConfig& cfg);

// Full pipeline through the stage cache of `pipeline`.
BackgroundScore score_background(Pipeline& pipeline, std::string_view video_id,
                                 const FrameSequence& frames, std::string_view prompt,
                                 const BackgroundConfig& cfg,
                                 MsDebiasResult* details = nullptr);

}  // namespace dyneval
