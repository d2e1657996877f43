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

#include "dyneval/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dyneval/error.hpp"
#include "dyneval/local_backends.hpp"
#include "dyneval/pyramid.hpp"
#include "dyneval/random.hpp"

namespace dyneval::synthetic {

namespace {

constexpr double kTwoPi = 6.283185307179586;

Point2 centre(const Sprite& s, int t) {
  return {s.start.x + s.velocity.x * t, s.start.y + s.velocity.y * t};
}

Point2 wobble(const Sprite& s, const Point2& u, int t) {
  if (s.deformation_amplitude == 0.0) return {0.0, 0.0};
  const double phase = s.deformation_frequency * t + s.deformation_phase;
  return {s.deformation_amplitude * std::sin(phase + s.deformation_wavenumber * u.y),
          s.deformation_amplitude * std::cos(phase + s.deformation_wavenumber * u.x)};
}

Point2 forward(const Sprite& s, const Point2& u, int t) {
  const Point2 d = wobble(s, u, t);
  const double px = u.x + d.x;
  const double py = u.y + d.y;
  const double th = s.rotation_rate * t;
  const double c = std::cos(th);
  const double sn = std::sin(th);
  const Point2 ctr = centre(s, t);
  return {ctr.x + c * px - sn * py, ctr.y + sn * px + c * py};
}

Point2 inverse(const Sprite& s, const Point2& x, int t) {
  const Point2 ctr = centre(s, t);
  const double th = s.rotation_rate * t;
  const double c = std::cos(th);
  const double sn = std::sin(th);
  const double dx = x.x - ctr.x;
  const double dy = x.y - ctr.y;
  const Point2 v{c * dx + sn * dy, -sn * dx + c * dy};
  if (s.deformation_amplitude == 0.0) return v;
  // Fixed point of u = v - wobble(u); a contraction while a * kappa < 1.
  Point2 u = v;
  for (int it = 0; it < 100; ++it) {
    const Point2 d = wobble(s, u, t);
    const Point2 next{v.x - d.x, v.y - d.y};
    const double change = std::abs(next.x - u.x) + std::abs(next.y - u.y);
    u = next;
    if (change < 1e-13) break;
  }
  return u;
}

bool inside_shape(const Sprite& s, const Point2& u) {
  if (s.shape == Shape::disc) {
    return u.x * u.x + u.y * u.y <= s.half_width * s.half_width;
  }
  return std::abs(u.x) <= s.half_width && std::abs(u.y) <= s.half_height;
}

double reach(const Sprite& s) {
  const double extent = s.shape == Shape::disc
                            ? s.half_width
                            : std::hypot(s.half_width, s.half_height);
  return extent + s.deformation_amplitude * std::sqrt(2.0);
}

void check_scene(const SyntheticScene& scene) {
  if (scene.frames < 3) throw InvalidInput("synthetic scene needs at least 3 frames");
  if (scene.width <= 0 || scene.height <= 0) {
    throw InvalidInput("synthetic scene extent must be positive");
  }
  if (!scene.camera_path.empty() &&
      static_cast<int>(scene.camera_path.size()) != scene.frames) {
    throw InvalidInput("camera_path must hold one offset per frame");
  }
  for (const auto& s : scene.sprites) {
    const double r = reach(s);
    for (int t = 0; t < scene.frames; ++t) {
      const Point2 c = centre(s, t);
      if (c.x - r < 0 || c.y - r < 0 || c.x + r > scene.width - 1 ||
          c.y + r > scene.height - 1) {
        throw InvalidInput("sprite '" + s.name + "' leaves the frame at frame " +
                           std::to_string(t));
      }
    }
  }
}

// Periodic value-noise texture tile with a fine random component.
Image<std::uint8_t> texture_tile(const SyntheticScene& scene) {
  const int p = std::max(4, scene.texture_period);
  Rng rng(mix_seed(scene.seed, 1));
  constexpr int kLattice = 4;
  std::vector<std::array<double, 3>> lattice(kLattice * kLattice);
  for (auto& v : lattice) {
    for (auto& c : v) c = rng.uniform(40.0, 215.0);
  }
  Image<std::uint8_t> tile(p, p, 3);
  const double cell = static_cast<double>(p) / kLattice;
  for (int y = 0; y < p; ++y) {
    for (int x = 0; x < p; ++x) {
      const double fx = x / cell;
      const double fy = y / cell;
      const int x0 = static_cast<int>(fx) % kLattice;
      const int y0 = static_cast<int>(fy) % kLattice;
      const int x1 = (x0 + 1) % kLattice;
      const int y1 = (y0 + 1) % kLattice;
      const double ax = fx - std::floor(fx);
      const double ay = fy - std::floor(fy);
      for (int c = 0; c < 3; ++c) {
        const double top = (1 - ax) * lattice[y0 * kLattice + x0][c] +
                           ax * lattice[y0 * kLattice + x1][c];
        const double bot = (1 - ax) * lattice[y1 * kLattice + x0][c] +
                           ax * lattice[y1 * kLattice + x1][c];
        const double noise = rng.uniform(-12.0, 12.0);
        tile(y, x, c) = static_cast<std::uint8_t>(
            std::clamp(std::lround((1 - ay) * top + ay * bot + noise), 0L, 255L));
      }
    }
  }
  return tile;
}

int wrap(int v, int n) {
  const int r = v % n;
  return r < 0 ? r + n : r;
}

}  // namespace

std::pair<int, int> camera_offset(const SyntheticScene& scene, int frame) {
  if (!scene.camera_path.empty()) return scene.camera_path.at(frame);
  return {scene.camera_dx * frame, scene.camera_dy * frame};
}

Image<int> label_map(const SyntheticScene& scene, int frame) {
  Image<int> labels(scene.width, scene.height, 1, -1);
  for (std::size_t s = 0; s < scene.sprites.size(); ++s) {
    const Sprite& sp = scene.sprites[s];
    const Point2 c = centre(sp, frame);
    const double r = reach(sp) + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x - r)));
    const int x1 = std::min(scene.width - 1, static_cast<int>(std::ceil(c.x + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y - r)));
    const int y1 = std::min(scene.height - 1, static_cast<int>(std::ceil(c.y + r)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (inside_shape(sp, inverse(sp, {double(x), double(y)}, frame))) {
          labels(y, x) = static_cast<int>(s);
        }
      }
    }
  }
  for (std::size_t k = 0; k < scene.occluders.size(); ++k) {
    const Occluder& o = scene.occluders[k];
    for (int y = std::max(0, o.y0); y < std::min(scene.height, o.y1); ++y) {
      for (int x = std::max(0, o.x0); x < std::min(scene.width, o.x1); ++x) {
        labels(y, x) = kOccluderLabel + static_cast<int>(k);
      }
    }
  }
  return labels;
}

FrameSequence render_synthetic_scene(const SyntheticScene& scene) {
  check_scene(scene);
  const Image<std::uint8_t> tile = texture_tile(scene);
  const int p = tile.width();
  FrameSequence seq;
  seq.frames.reserve(scene.frames);
  for (int f = 0; f < scene.frames; ++f) {
    const auto [cx, cy] = camera_offset(scene, f);
    const Image<int> labels = label_map(scene, f);
    RgbFrame frame = make_frame(scene.width, scene.height);
    for (int y = 0; y < scene.height; ++y) {
      for (int x = 0; x < scene.width; ++x) {
        const int label = labels(y, x);
        for (int c = 0; c < 3; ++c) {
          int v;
          if (label < 0) {
            v = tile(wrap(y + cy, p), wrap(x + cx, p), c);
            const auto& fl = scene.flicker;
            if (fl && f % 2 == 1 && x >= fl->x0 && x < fl->x1 && y >= fl->y0 &&
                y < fl->y1) {
              v = std::clamp(v + fl->amplitude, 0, 255);
            }
          } else if (label >= kOccluderLabel) {
            v = scene.occluders[label - kOccluderLabel].color[c];
          } else {
            v = scene.sprites[label].color[c];
          }
          frame(y, x, c) = static_cast<std::uint8_t>(v);
        }
      }
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

std::vector<MaskSequence> oracle_masks(const SyntheticScene& scene) {
  check_scene(scene);
  std::vector<MaskSequence> out(scene.sprites.size());
  for (int f = 0; f < scene.frames; ++f) {
    const Image<int> labels = label_map(scene, f);
    for (std::size_t s = 0; s < scene.sprites.size(); ++s) {
      Mask m = make_mask(scene.width, scene.height);
      for (std::size_t i = 0; i < m.size(); ++i) {
        m.pixels()[i] = labels.pixels()[i] == static_cast<int>(s) ? 1 : 0;
      }
      out[s].push_back(std::move(m));
    }
  }
  return out;
}

std::vector<MaskSequence> oracle_object_masks(const SyntheticScene& scene) {
  std::vector<MaskSequence> out = oracle_masks(scene);
  for (std::size_t k = 0; k < scene.occluders.size(); ++k) {
    MaskSequence seq;
    for (int f = 0; f < scene.frames; ++f) {
      const Image<int> labels = label_map(scene, f);
      Mask m = make_mask(scene.width, scene.height);
      for (std::size_t i = 0; i < m.size(); ++i) {
        m.pixels()[i] = labels.pixels()[i] == kOccluderLabel + static_cast<int>(k) ? 1 : 0;
      }
      seq.push_back(std::move(m));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

TrackSet oracle_tracks(const SyntheticScene& scene, int start_frame,
                       std::span<const Point2> queries) {
  check_scene(scene);
  if (start_frame < 0 || start_frame >= scene.frames) {
    throw InvalidInput("oracle_tracks: start frame out of range");
  }
  std::vector<Image<int>> labels;
  labels.reserve(scene.frames);
  for (int f = 0; f < scene.frames; ++f) labels.push_back(label_map(scene, f));

  auto pixel_of = [&](const Point2& p, int& i, int& j) {
    j = static_cast<int>(std::lround(p.x));
    i = static_cast<int>(std::lround(p.y));
    return j >= 0 && j < scene.width && i >= 0 && i < scene.height;
  };

  TrackSet set;
  set.tracks.reserve(queries.size());
  for (const Point2& q : queries) {
    int i0, j0;
    if (!std::isfinite(q.x) || !std::isfinite(q.y) || !pixel_of(q, i0, j0)) {
      throw InvalidInput("oracle_tracks: query point outside the frame at start");
    }
    const int owner = labels[start_frame](i0, j0);
    Track t;
    t.positions.resize(scene.frames);
    t.visible.resize(scene.frames);
    Point2 local{};
    if (owner >= 0 && owner < kOccluderLabel) {
      local = inverse(scene.sprites[owner], q, start_frame);
    }
    const auto [scx, scy] = camera_offset(scene, start_frame);
    for (int f = 0; f < scene.frames; ++f) {
      Point2 p;
      if (f == start_frame) {
        p = q;
      } else if (owner < 0) {
        const auto [cx, cy] = camera_offset(scene, f);
        p = {q.x + scx - cx, q.y + scy - cy};
      } else if (owner >= kOccluderLabel) {
        p = q;
      } else {
        p = forward(scene.sprites[owner], local, f);
      }
      t.positions[f] = p;
      int i, j;
      bool vis = false;
      if (pixel_of(p, i, j)) {
        const int label = labels[f](i, j);
        if (owner < 0) {
          vis = label < 0;
        } else if (owner >= kOccluderLabel) {
          vis = label == owner;
        } else {
          vis = label < kOccluderLabel && label <= owner;
        }
      }
      t.visible[f] = vis ? 1 : 0;
    }
    set.tracks.push_back(std::move(t));
  }
  return set;
}

RgbFrame oracle_interpolate(const SyntheticScene& scene, int frame_index) {
  FrameSequence frames = render_synthetic_scene(scene);
  if (frame_index < 0 || frame_index >= frames.size()) {
    throw InvalidInput("oracle_interpolate: frame index out of range");
  }
  return std::move(frames.frames[frame_index]);
}

SyntheticScene make_scene(std::uint64_t seed, const SceneOptions& o) {
  SyntheticScene scene;
  scene.seed = seed;
  scene.width = o.width;
  scene.height = o.height;
  scene.frames = o.frames;
  scene.camera_dx = o.camera_dx;
  scene.camera_dy = o.camera_dy;
  Rng rng(mix_seed(seed, 2));
  static const char* kNames[] = {"ball", "box", "kite", "drone", "dog", "car"};
  for (int s = 0; s < o.sprite_count; ++s) {
    Sprite sp;
    sp.name = kNames[s % 6];
    if (s >= 6) sp.name += std::to_string(s / 6);
    sp.shape = s % 2 == 0 ? Shape::disc : Shape::rect;
    sp.half_width = o.sprite_radius;
    sp.half_height = sp.shape == Shape::rect ? 0.75 * o.sprite_radius : o.sprite_radius;
    for (auto& c : sp.color) c = static_cast<std::uint8_t>(rng.index(200) + 30);
    sp.rotation_rate = o.rotation_rate;
    sp.deformation_amplitude = o.deformation_amplitude;
    sp.deformation_phase = rng.uniform(0.0, kTwoPi);
    const double angle = rng.uniform(0.0, kTwoPi);
    sp.velocity = {o.sprite_speed * std::cos(angle), o.sprite_speed * std::sin(angle)};
    const double margin = reach(sp) + 1.0;
    const double span_x = sp.velocity.x * (o.frames - 1);
    const double span_y = sp.velocity.y * (o.frames - 1);
    double lo_x = margin - std::min(0.0, span_x);
    double hi_x = o.width - 1 - margin - std::max(0.0, span_x);
    double lo_y = margin - std::min(0.0, span_y);
    double hi_y = o.height - 1 - margin - std::max(0.0, span_y);
    if (lo_x > hi_x || lo_y > hi_y) {
      sp.velocity = {0.0, 0.0};
      lo_x = margin;
      hi_x = o.width - 1 - margin;
      lo_y = margin;
      hi_y = o.height - 1 - margin;
    }
    if (lo_x > hi_x || lo_y > hi_y) {
      throw InvalidInput("make_scene: sprite does not fit in the frame");
    }
    sp.start = {rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)};
    scene.sprites.push_back(std::move(sp));
  }
  if (o.with_occluder) {
    Occluder band;
    band.x0 = o.width / 2 - 3;
    band.x1 = o.width / 2 + 3;
    band.y0 = 0;
    band.y1 = o.height;
    scene.occluders.push_back(band);
  }
  return scene;
}

// --- Oracle backends -------------------------------------------------------

OracleInterpolator::OracleInterpolator(SyntheticScene scene) : scene_(std::move(scene)) {}

std::string OracleInterpolator::id() const { return "oracle-interpolator"; }

RgbFrame OracleInterpolator::interpolate(const backends::InterpolationRequest& request) {
  std::lock_guard lock(mutex_);
  if (pyramid_.empty()) pyramid_.push_back(render_synthetic_scene(scene_));
  while (static_cast<int>(pyramid_.size()) <= request.level) {
    FrameSequence next;
    for (const auto& f : pyramid_.back().frames) next.frames.push_back(pyr_down(f));
    pyramid_.push_back(std::move(next));
  }
  const FrameSequence& level = pyramid_[request.level];
  if (request.frame_index < 0 || request.frame_index >= level.size()) {
    throw BackendError("oracle interpolator: frame index out of range");
  }
  const RgbFrame& truth = level[request.frame_index];
  if (!truth.same_shape(request.previous)) {
    throw BackendError("oracle interpolator: request does not match the scene");
  }
  return truth;
}

std::vector<Mask> OracleSegmenter::segment(std::string_view, const RgbFrame&) {
  std::vector<Mask> regions;
  for (auto& seq : oracle_object_masks(scene_)) {
    if (mask_area(seq.front()) > 0) regions.push_back(std::move(seq.front()));
  }
  return regions;
}

std::vector<MaskSequence> OraclePropagator::propagate(std::string_view,
                                                      const FrameSequence& frames,
                                                      int start_frame,
                                                      std::span<const Mask> initial) {
  const std::vector<MaskSequence> objects = oracle_object_masks(scene_);
  std::vector<MaskSequence> out;
  out.reserve(initial.size());
  for (const Mask& region : initial) {
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t o = 0; o < objects.size(); ++o) {
      const Mask& m = objects[o][start_frame];
      std::size_t inter = 0, uni = 0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        inter += m.pixels()[i] && region.pixels()[i];
        uni += m.pixels()[i] || region.pixels()[i];
      }
      const double iou = uni ? static_cast<double>(inter) / uni : 0.0;
      if (iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(o);
      }
    }
    if (best < 0) {
      out.emplace_back(frames.size(), make_mask(frames.width(), frames.height()));
    } else {
      out.push_back(objects[best]);
    }
  }
  return out;
}

std::vector<backends::GroundedPhrase> OracleGrounder::ground(
    std::string_view, const RgbFrame&, std::span<const std::string> phrases) {
  const std::vector<MaskSequence> masks = oracle_masks(scene_);
  std::vector<backends::GroundedPhrase> out;
  for (const auto& phrase : phrases) {
    backends::GroundedPhrase g{phrase, {}};
    for (std::size_t s = 0; s < scene_.sprites.size(); ++s) {
      if (scene_.sprites[s].name != phrase) continue;
      const Mask& m = masks[s].front();
      int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
      for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
          if (!m(y, x)) continue;
          x0 = std::min(x0, x);
          y0 = std::min(y0, y);
          x1 = std::max(x1, x);
          y1 = std::max(y1, y);
        }
      }
      if (x1 >= 0) g.boxes.push_back({double(x0), double(y0), double(x1 + 1), double(y1 + 1), 0.9});
    }
    out.push_back(std::move(g));
  }
  return out;
}

TrackSet OracleTracker::track(std::string_view, const FrameSequence&, int start_frame,
                              std::span<const Point2> queries) {
  return oracle_tracks(scene_, start_frame, queries);
}

std::vector<backends::TaggedPhrase> ScriptedPhraseExtractor::extract(std::string_view prompt) {
  if (auto it = by_prompt_.find(std::string(prompt)); it != by_prompt_.end()) {
    return it->second;
  }
  return default_;
}

backends::BackendSet oracle_backends(const SyntheticScene& scene) {
  backends::BackendSet set;
  set.interpolator = std::make_shared<OracleInterpolator>(scene);
  set.scene_embedder = std::make_shared<backends::ThumbnailEmbedder>(4);
  set.object_embedder = std::make_shared<backends::ThumbnailEmbedder>(8);
  set.grounder = std::make_shared<OracleGrounder>(scene);
  set.propagator = std::make_shared<OraclePropagator>(scene);
  set.segmenter = std::make_shared<OracleSegmenter>(scene);
  set.tracker = std::make_shared<OracleTracker>(scene);
  std::vector<backends::TaggedPhrase> phrases;
  for (const auto& s : scene.sprites) {
    phrases.push_back({s.name, backends::MotionTag::dynamic_object});
  }
  set.extractor = std::make_shared<ScriptedPhraseExtractor>(std::move(phrases));
  return set;
}

}  // namespace dyneval::synthetic
