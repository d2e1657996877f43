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

#include "dyneval/background.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "dyneval/error.hpp"
#include "dyneval/morphology.hpp"
#include "dyneval/pipeline.hpp"
#include "dyneval/pyramid.hpp"

namespace dyneval {

void EdgeMapConfig::validate() const {
  auto odd = [](int k) { return k >= 3 && k % 2 == 1; };
  if (!odd(gradient_kernel)) throw InvalidInput("gradient_kernel must be odd and >= 3");
  if (!odd(dilation_kernel)) throw InvalidInput("dilation_kernel must be odd and >= 3");
  if (dilation_iterations < 1) throw InvalidInput("dilation_iterations must be >= 1");
}

std::vector<double> PyramidConfig::normalized_weights() const {
  validate();
  const double total = std::accumulate(raw_weights.begin(), raw_weights.end(), 0.0);
  std::vector<double> w;
  w.reserve(raw_weights.size());
  for (double r : raw_weights) w.push_back(r / total);
  return w;
}

void PyramidConfig::validate() const {
  if (raw_weights.empty()) throw InvalidInput("pyramid needs at least one level");
  double total = 0;
  for (double r : raw_weights) {
    if (!(r >= 0) || !std::isfinite(r)) throw InvalidInput("pyramid weights must be >= 0");
    total += r;
  }
  if (total <= 0) throw InvalidInput("pyramid weights must not all be zero");
  if (min_extent < 1) throw InvalidInput("pyramid min_extent must be >= 1");
}

void BackgroundConfig::validate() const {
  edges.validate();
  pyramid.validate();
  if (grounding_threshold < 0 || grounding_threshold > 1) {
    throw InvalidInput("grounding_threshold must lie in [0, 1]");
  }
  if (min_valid_fraction < 0 || min_valid_fraction > 1) {
    throw InvalidInput("min_valid_fraction must lie in [0, 1]");
  }
}

nlohmann::json to_json(const BackgroundConfig& c) {
  return {{"edges",
           {{"gradient_kernel", c.edges.gradient_kernel},
            {"dilation_kernel", c.edges.dilation_kernel},
            {"dilation_iterations", c.edges.dilation_iterations}}},
          {"pyramid", {{"raw_weights", c.pyramid.raw_weights}, {"min_extent", c.pyramid.min_extent}}},
          {"grounding_threshold", c.grounding_threshold},
          {"min_valid_fraction", c.min_valid_fraction}};
}

BackgroundConfig background_config_from_json(const nlohmann::json& j) {
  BackgroundConfig c;
  if (j.is_null()) return c;
  try {
    if (j.contains("edges")) {
      const auto& e = j.at("edges");
      c.edges.gradient_kernel = e.value("gradient_kernel", c.edges.gradient_kernel);
      c.edges.dilation_kernel = e.value("dilation_kernel", c.edges.dilation_kernel);
      c.edges.dilation_iterations = e.value("dilation_iterations", c.edges.dilation_iterations);
    }
    if (j.contains("pyramid")) {
      const auto& p = j.at("pyramid");
      c.pyramid.raw_weights = p.value("raw_weights", c.pyramid.raw_weights);
      c.pyramid.min_extent = p.value("min_extent", c.pyramid.min_extent);
    }
    c.grounding_threshold = j.value("grounding_threshold", c.grounding_threshold);
    c.min_valid_fraction = j.value("min_valid_fraction", c.min_valid_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("background config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const BackgroundScore& s) {
  return {{"vb_ms", s.vb_ms},
          {"ms_debias", s.ms_debias},
          {"vb_bg", s.vb_bg},
          {"combined", s.combined},
          {"per_level_errors", s.per_level_errors},
          {"level_weights", s.level_weights},
          {"valid_pixel_fraction", s.valid_pixel_fraction},
          {"objects", s.objects}};
}

BackgroundScore background_score_from_json(const nlohmann::json& j) {
  BackgroundScore s;
  s.vb_ms = j.at("vb_ms").get<double>();
  s.ms_debias = j.at("ms_debias").get<double>();
  s.vb_bg = j.at("vb_bg").get<double>();
  s.combined = j.at("combined").get<double>();
  // Dropped levels are serialized as null.
  for (const auto& e : j.value("per_level_errors", nlohmann::json::array())) {
    s.per_level_errors.push_back(e.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                             : e.get<double>());
  }
  s.level_weights = j.value("level_weights", std::vector<double>{});
  s.valid_pixel_fraction = j.value("valid_pixel_fraction", 0.0);
  s.objects = j.value("objects", 0);
  return s;
}

// --- error maps ---------------------------------------------------------------

ErrorMapStack compute_ms_error_maps(const FrameSequence& frames,
                                    backends::Interpolator& interpolator,
                                    std::string_view video_id, int level) {
  if (frames.size() < 3) throw InvalidInput("error maps need at least 3 frames");
  ErrorMapStack stack;
  for (int i = 1; i + 1 < frames.size(); i += 2) {
    const backends::InterpolationRequest request{video_id, level, i, frames[i - 1],
                                                 frames[i + 1]};
    RgbFrame predicted;
    try {
      predicted = interpolator.interpolate(request);
      backends::check_interpolation(request, predicted);
    } catch (const BackendError& e) {
      throw BackendError("interpolation of frame " + std::to_string(i) + " failed: " + e.what());
    }
    const RgbFrame& truth = frames[i];
    Plane e(truth.width(), truth.height());
    const int c = truth.channels();
    auto pred = predicted.pixels();
    auto orig = truth.pixels();
    auto out = e.pixels();
    for (std::size_t p = 0; p < out.size(); ++p) {
      int acc = 0;
      for (int ch = 0; ch < c; ++ch) {
        acc += std::abs(int(pred[p * c + ch]) - int(orig[p * c + ch]));
      }
      out[p] = static_cast<float>(acc) / static_cast<float>(c);
    }
    stack.maps.push_back({i, std::move(e)});
  }
  return stack;
}

double vb_ms_score(const ErrorMapStack& stack) {
  if (stack.empty()) throw InvalidInput("vb_ms_score: empty error-map stack");
  double sum = 0;
  std::size_t n = 0;
  for (const auto& m : stack.maps) {
    for (float v : m.values.pixels()) sum += v;
    n += m.values.size();
  }
  if (n == 0) throw InvalidInput("vb_ms_score: error maps hold no pixels");
  return 1.0 - (sum / static_cast<double>(n)) / 255.0;
}

// --- masks --------------------------------------------------------------------

Mask compute_edge_map(std::span<const Mask> masks, int width, int height,
                      const EdgeMapConfig& cfg) {
  cfg.validate();
  Mask edges = make_mask(width, height);
  for (const Mask& m : masks) {
    if (m.width() != width || m.height() != height) {
      throw InvalidInput("compute_edge_map: mask extent differs from the frame");
    }
    if (mask_area(m) == 0) continue;
    Mask band = morphological_gradient(m, cfg.gradient_kernel);
    for (int k = 0; k < cfg.dilation_iterations; ++k) band = dilate(band, cfg.dilation_kernel);
    edges = mask_union(edges, band);
  }
  return edges;
}

std::vector<std::string> extract_moving_objects(std::string_view prompt,
                                                backends::PhraseExtractor& extractor) {
  if (prompt.empty()) throw InvalidInput("extract_moving_objects: empty prompt");
  std::vector<backends::TaggedPhrase> tagged;
  try {
    tagged = extractor.extract(prompt);
    backends::check_phrases(tagged);
  } catch (const NotRecorded&) {
    throw;
  } catch (const BackendError& e) {
    spdlog::warn("phrase extraction failed, continuing with edge-only debiasing: {}", e.what());
    return {};
  }
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& t : tagged) {
    if (t.tag != backends::MotionTag::dynamic_object) continue;
    if (seen.insert(t.phrase).second) out.push_back(t.phrase);
  }
  return out;
}

MaskSequence union_masks(const std::vector<MaskSequence>& objects, int width, int height,
                         int frames) {
  MaskSequence out(frames, make_mask(width, height));
  for (const auto& seq : objects) {
    if (static_cast<int>(seq.size()) != frames) {
      throw InvalidInput("union_masks: object mask count differs from frame count");
    }
    for (int f = 0; f < frames; ++f) out[f] = mask_union(out[f], seq[f]);
  }
  return out;
}

ObjectMasks compute_object_masks(std::string_view video_id, const FrameSequence& frames,
                                 std::span<const std::string> phrases,
                                 backends::Grounder& grounder,
                                 backends::MaskPropagator& propagator, double threshold) {
  ObjectMasks result;
  const int w = frames.width();
  const int h = frames.height();
  if (!phrases.empty()) {
    const RgbFrame& reference = frames[0];
    auto grounded = grounder.ground(video_id, reference, phrases);
    backends::check_grounding(reference, phrases, grounded);
    std::vector<Mask> initial;
    for (const auto& g : grounded) {
      const backends::Box* best = nullptr;
      for (const auto& b : g.boxes) {
        if (b.confidence >= threshold && (!best || b.confidence > best->confidence)) best = &b;
      }
      if (!best) continue;
      Mask m = backends::box_mask(*best, w, h);
      if (mask_area(m) > 0) initial.push_back(std::move(m));
    }
    if (!initial.empty()) {
      result.objects = propagator.propagate(video_id, frames, 0, initial);
      backends::check_propagation(frames, initial.size(), result.objects);
    }
  }
  result.unions = union_masks(result.objects, w, h, frames.size());
  return result;
}

std::vector<MaskSequence> compute_auto_masks(std::string_view video_id,
                                             const FrameSequence& frames,
                                             backends::AutoSegmenter& segmenter,
                                             backends::MaskPropagator& propagator) {
  std::vector<Mask> regions = segmenter.segment(video_id, frames[0]);
  for (const auto& r : regions) {
    if (r.width() != frames.width() || r.height() != frames.height() || r.channels() != 1) {
      throw BackendError("auto segmenter returned a mask of the wrong extent");
    }
  }
  if (regions.empty()) return {};
  auto out = propagator.propagate(video_id, frames, 0, regions);
  backends::check_propagation(frames, regions.size(), out);
  return out;
}

// --- debiasing ----------------------------------------------------------------

DebiasedMap debias_error_map(const Plane& error, const Mask& edges, const Mask& objects) {
  if (!error.same_extent(edges) || !error.same_extent(objects)) {
    throw InvalidInput("debias_error_map: error map and masks differ in extent");
  }
  DebiasedMap out{Plane(error.width(), error.height()), 0, 0.0};
  auto e = error.pixels();
  auto me = edges.pixels();
  auto mo = objects.pixels();
  auto dst = out.values.pixels();
  for (std::size_t p = 0; p < dst.size(); ++p) {
    const bool masked = me[p] || mo[p];
    dst[p] = masked ? 0.0f : e[p];
    out.valid_pixels += masked ? 0 : 1;
  }
  out.valid_fraction =
      dst.empty() ? 0.0 : static_cast<double>(out.valid_pixels) / static_cast<double>(dst.size());
  return out;
}

LevelError level_error(const std::vector<DebiasedMap>& maps, double min_valid_fraction) {
  LevelError r;
  double sum = 0;
  for (const auto& m : maps) {
    r.total_pixels += m.values.size();
    if (m.valid_pixels == 0 || m.valid_fraction < min_valid_fraction) {
      ++r.frames_excluded;
      continue;
    }
    ++r.frames_used;
    r.valid_pixels += m.valid_pixels;
    for (float v : m.values.pixels()) sum += v;
  }
  r.error = r.valid_pixels ? sum / static_cast<double>(r.valid_pixels) : 0.0;
  return r;
}

double aggregate_levels(std::span<const double> errors, std::span<const double> weights) {
  if (errors.size() != weights.size() || errors.empty()) {
    throw InvalidInput("aggregate_levels: need one weight per level");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0)) throw InvalidInput("aggregate_levels: weights sum to zero");
  double acc = 0;
  for (std::size_t l = 0; l < errors.size(); ++l) acc += (weights[l] / total) * errors[l];
  return acc;
}

MaskSequence level_edge_maps(const std::vector<MaskSequence>& auto_masks, int level,
                             int frames, int width, int height, const EdgeMapConfig& cfg) {
  MaskSequence out;
  out.reserve(frames);
  std::vector<Mask> per_object(auto_masks.size());
  for (int f = 0; f < frames; ++f) {
    for (std::size_t o = 0; o < auto_masks.size(); ++o) {
      per_object[o] = downscale_mask(auto_masks[o].at(f), level);
    }
    out.push_back(compute_edge_map(per_object, width, height, cfg));
  }
  return out;
}

MsDebiasResult ms_debias_from_maps(const std::vector<ErrorMapStack>& level_maps,
                                   const std::vector<MaskSequence>& level_edges,
                                   const MaskSequence& object_unions,
                                   const BackgroundConfig& cfg) {
  cfg.validate();
  const int levels = static_cast<int>(level_maps.size());
  if (levels == 0 || levels > cfg.pyramid.levels() ||
      static_cast<int>(level_edges.size()) != levels) {
    throw InvalidInput("ms_debias_from_maps: level count mismatch");
  }
  MsDebiasResult result;
  std::vector<double> errors;
  std::vector<double> weights;
  for (int l = 0; l < levels; ++l) {
    const ErrorMapStack& stack = level_maps[l];
    if (stack.empty()) throw InvalidInput("ms_debias_from_maps: empty error-map stack");
    std::vector<DebiasedMap> maps;
    ErrorMapStack debiased;
    for (const ErrorMap& m : stack.maps) {
      const int i = m.frame_index;
      if (i < 0 || i >= static_cast<int>(level_edges[l].size()) ||
          i >= static_cast<int>(object_unions.size())) {
        throw InvalidInput("ms_debias_from_maps: no masks for frame " + std::to_string(i));
      }
      const Mask objects = downscale_mask(object_unions[i], l);
      DebiasedMap d = debias_error_map(m.values, level_edges[l][i], objects);
      debiased.maps.push_back({i, d.values});
      maps.push_back(std::move(d));
    }
    const LevelError le = level_error(maps, cfg.min_valid_fraction);
    if (l == 0) {
      result.valid_pixel_fraction =
          le.total_pixels ? static_cast<double>(le.valid_pixels) / le.total_pixels : 0.0;
    }
    result.debiased.push_back(std::move(debiased));
    if (le.empty()) {
      spdlog::warn("pyramid level {} has no usable frame; dropping it", l);
      result.per_level_errors.push_back(std::nan(""));
      continue;
    }
    result.per_level_errors.push_back(le.error);
    errors.push_back(le.error);
    weights.push_back(cfg.pyramid.raw_weights[l]);
  }
  if (errors.empty()) {
    throw InvalidInput("every frame is masked at every level; MS-Debias is undefined");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (int l = 0, k = 0; l < levels; ++l) {
    if (std::isnan(result.per_level_errors[l])) {
      result.level_weights.push_back(0.0);
    } else {
      result.level_weights.push_back(weights[k++] / total);
    }
  }
  const double final_error = aggregate_levels(errors, weights);
  result.score = std::clamp(1.0 - final_error / 255.0, 0.0, 1.0);
  return result;
}

// --- embedding baseline -------------------------------------------------------

double consecutive_similarity(const std::vector<backends::Embedding>& e) {
  if (e.size() < 2) throw InvalidInput("similarity needs at least 2 frames");
  double sum = 0;
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    sum += std::clamp(backends::cosine(e[i], e[i + 1]), 0.0, 1.0);
  }
  return sum / static_cast<double>(e.size() - 1);
}

double vb_bg_score(const FrameSequence& frames, backends::Embedder& embedder,
                   std::string_view video_id) {
  if (frames.size() < 2) throw InvalidInput("vb_bg_score needs at least 2 frames");
  auto e = embedder.embed(video_id, frames);
  backends::check_embeddings(frames, e);
  return consecutive_similarity(e);
}

double combined_bg_score(double vb_bg, double ms_debias) {
  if (!(vb_bg >= 0 && vb_bg <= 1 && ms_debias >= 0 && ms_debias <= 1)) {
    throw InvalidInput("combined_bg_score: components must lie in [0, 1]");
  }
  return 0.5 * (vb_bg + ms_debias);
}

// --- full pipeline ------------------------------------------------------------

namespace {

MsDebiasResult run_ms_debias(Pipeline& pipeline, std::string_view video_id,
                             const FrameSequence& frames, std::string_view prompt,
                             const BackgroundConfig& cfg, ErrorMapStack* level0_raw,
                             int* objects) {
  cfg.validate();
  if (frames.size() < 3) throw InvalidInput("MS-Debias needs at least 3 frames");
  const int requested = cfg.pyramid.levels();
  const int levels =
      feasible_levels(frames.width(), frames.height(), requested, cfg.pyramid.min_extent);
  if (levels < requested) {
    spdlog::warn("'{}' is too small for {} pyramid levels; using {}", video_id, requested, levels);
  }
  BackgroundConfig used = cfg;
  used.pyramid.raw_weights.resize(levels);

  const auto pyramid = video_pyramid(frames, levels);
  std::vector<ErrorMapStack> maps;
  for (int l = 0; l < levels; ++l) maps.push_back(pipeline.error_maps(video_id, pyramid[l], l));
  const auto edges = pipeline.edge_maps(video_id, frames, levels, cfg.edges);
  const auto object_masks =
      pipeline.object_masks(video_id, frames, prompt, cfg.grounding_threshold);
  if (objects) *objects = static_cast<int>(object_masks.size());
  const MaskSequence unions =
      union_masks(object_masks, frames.width(), frames.height(), frames.size());
  if (level0_raw) *level0_raw = maps.front();
  MsDebiasResult r = ms_debias_from_maps(maps, edges, unions, used);
  // Report weights over the requested levels so per-level vectors line up.
  r.level_weights.resize(requested, 0.0);
  r.per_level_errors.resize(requested, std::nan(""));
  return r;
}

}  // namespace

MsDebiasResult ms_debias_score(std::string_view video_id, const FrameSequence& frames,
                               std::string_view prompt, const backends::BackendSet& backends,
                               const BackgroundConfig& cfg) {
  Pipeline pipeline(backends);
  return run_ms_debias(pipeline, video_id, frames, prompt, cfg, nullptr, nullptr);
}

BackgroundScore score_background(Pipeline& pipeline, std::string_view video_id,
                                 const FrameSequence& frames, std::string_view prompt,
                                 const BackgroundConfig& cfg, MsDebiasResult* details) {
  BackgroundScore s;
  ErrorMapStack raw;
  MsDebiasResult r = run_ms_debias(pipeline, video_id, frames, prompt, cfg, &raw, &s.objects);
  s.vb_ms = vb_ms_score(raw);
  s.ms_debias = r.score;
  s.vb_bg = consecutive_similarity(pipeline.scene_embeddings(video_id, frames));
  s.combined = combined_bg_score(s.vb_bg, s.ms_debias);
  s.per_level_errors = r.per_level_errors;
  s.level_weights = r.level_weights;
  s.valid_pixel_fraction = r.valid_pixel_fraction;
  if (details) *details = std::move(r);
  return s;
}

}  // namespace dyneval
