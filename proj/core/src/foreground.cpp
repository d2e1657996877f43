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

#include "dyneval/foreground.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dyneval/background.hpp"
#include "dyneval/error.hpp"
#include "dyneval/hashing.hpp"
#include "dyneval/pipeline.hpp"
#include "dyneval/random.hpp"

namespace dyneval {

using nlohmann::json;

void TrackerFGConfig::validate() const {
  if (neighbors < 1) throw InvalidInput("neighbors must be >= 1");
  if (points_per_object <= neighbors) {
    throw InvalidInput("points_per_object must exceed neighbors");
  }
  if (window < 3 || window % 2 == 0) throw InvalidInput("window must be odd and >= 3");
  if (min_covisible < 1) throw InvalidInput("min_covisible must be >= 1");
  if (!(sigma > 0)) throw InvalidInput("sigma must be positive");
}

json to_json(const TrackerFGConfig& c) {
  return {{"points_per_object", c.points_per_object},
          {"neighbors", c.neighbors},
          {"window", c.window},
          {"min_covisible", c.min_covisible},
          {"sigma", c.sigma},
          {"mode", c.mode == NeighborMode::anchor ? "anchor" : "per_frame"},
          {"seed", c.seed}};
}

TrackerFGConfig tracker_fg_config_from_json(const json& j) {
  TrackerFGConfig c;
  if (j.is_null()) return c;
  try {
    c.points_per_object = j.value("points_per_object", c.points_per_object);
    c.neighbors = j.value("neighbors", c.neighbors);
    c.window = j.value("window", c.window);
    c.min_covisible = j.value("min_covisible", c.min_covisible);
    c.sigma = j.value("sigma", c.sigma);
    c.seed = j.value("seed", c.seed);
    const std::string mode = j.value("mode", std::string("anchor"));
    if (mode == "anchor") {
      c.mode = NeighborMode::anchor;
    } else if (mode == "per_frame") {
      c.mode = NeighborMode::per_frame;
    } else {
      throw InvalidInput("unknown neighbor mode '" + mode + "'");
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("foreground config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_or_nan(const json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

json to_json(const ForegroundScore& s) {
  return {{"tracker_fg_inconsistency", number_or_null(s.tracker_fg_inconsistency)},
          {"tracker_fg", number_or_null(s.tracker_fg)},
          {"vb_sc", s.vb_sc},
          {"combined", s.combined},
          {"objects_found", s.objects_found},
          {"per_object", s.per_object}};
}

ForegroundScore foreground_score_from_json(const json& j) {
  ForegroundScore s;
  s.tracker_fg_inconsistency = number_or_nan(j.at("tracker_fg_inconsistency"));
  s.tracker_fg = number_or_nan(j.at("tracker_fg"));
  s.vb_sc = j.at("vb_sc").get<double>();
  s.combined = j.at("combined").get<double>();
  s.objects_found = j.at("objects_found").get<int>();
  s.per_object = j.value("per_object", std::vector<double>{});
  return s;
}

std::vector<Point2> sample_points_in_mask(const Mask& mask, int count, std::uint64_t seed) {
  std::vector<int> pixels;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(y, x)) pixels.push_back(y * mask.width() + x);
    }
  }
  if (count <= 0 || pixels.empty()) return {};
  const auto n = static_cast<int>(pixels.size());
  if (n < count) {
    spdlog::warn("mask holds {} pixels, fewer than the {} requested points", n, count);
    count = n;
  }
  // Partial Fisher-Yates: the first `count` entries are a uniform sample.
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng.index(static_cast<std::uint64_t>(n - i)));
    std::swap(pixels[i], pixels[j]);
  }
  std::vector<Point2> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back({double(pixels[i] % mask.width()), double(pixels[i] / mask.width())});
  }
  return out;
}

int find_anchor_frame(const TrackSet& tracks, int k) {
  for (int f = 0; f < tracks.frames(); ++f) {
    int visible = 0;
    for (const auto& t : tracks.tracks) visible += t.is_visible(f);
    if (visible >= k + 1) return f;
  }
  return -1;
}

namespace {

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

std::vector<std::vector<int>> knn_neighbors(const TrackSet& tracks, int anchor, int k) {
  if (k < 1) throw InvalidInput("knn_neighbors: k must be >= 1");
  if (anchor < 0 || anchor >= tracks.frames()) {
    throw InvalidInput("knn_neighbors: anchor frame out of range");
  }
  std::vector<int> visible;
  for (int i = 0; i < tracks.size(); ++i) {
    if (tracks.tracks[i].is_visible(anchor)) visible.push_back(i);
  }
  if (static_cast<int>(visible.size()) < k + 1) {
    throw InvalidInput(fmt::format("knn_neighbors: {} visible tracks at frame {}, need {}",
                                   visible.size(), anchor, k + 1));
  }
  std::vector<std::vector<int>> out(tracks.size());
  std::vector<std::pair<double, int>> cand;
  for (int p : visible) {
    cand.clear();
    const Point2& pp = tracks.tracks[p].positions[anchor];
    for (int q : visible) {
      if (q != p) cand.push_back({dist(pp, tracks.tracks[q].positions[anchor]), q});
    }
    // (distance, index) ordering puts ties on the lower index.
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int r = 0; r < k; ++r) out[p].push_back(cand[r].second);
  }
  return out;
}

std::vector<double> neighbor_distance_series(const TrackSet& tracks, int p, int q) {
  const Track& a = tracks.tracks.at(p);
  const Track& b = tracks.tracks.at(q);
  std::vector<double> d;
  for (int f = 0; f < a.frames(); ++f) {
    if (a.is_visible(f) && b.is_visible(f)) d.push_back(dist(a.positions[f], b.positions[f]));
  }
  return d;
}

std::vector<double> moving_average(std::span<const double> s, int window) {
  if (window < 1 || window % 2 == 0) throw InvalidInput("moving_average: window must be odd");
  const int n = static_cast<int>(s.size());
  const int h = window / 2;
  // Prefix sums keep this O(n) for any window.
  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + s[i];
  std::vector<double> out(n);
  for (int t = 0; t < n; ++t) {
    const int lo = std::max(0, t - h);
    const int hi = std::min(n - 1, t + h);
    out[t] = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1);
  }
  return out;
}

double track_deviation(std::span<const double> d, std::span<const double> smoothed) {
  if (d.size() != smoothed.size()) throw InvalidInput("track_deviation: length mismatch");
  if (d.empty()) return 0.0;
  double acc = 0;
  for (std::size_t t = 0; t < d.size(); ++t) acc += std::abs(d[t] - smoothed[t]);
  return acc / static_cast<double>(d.size());
}

namespace {

// Per-frame ranked neighbour distances of point p: series[r][j] is the
// distance to the (r+1)-th nearest visible track on the j-th qualifying frame.
std::vector<std::vector<double>> ranked_series(const TrackSet& tracks, int p, int k,
                                               std::vector<int>* frames_out = nullptr) {
  std::vector<std::vector<double>> series(k);
  std::vector<double> d;
  for (int f = 0; f < tracks.frames(); ++f) {
    if (!tracks.tracks[p].is_visible(f)) continue;
    d.clear();
    for (int q = 0; q < tracks.size(); ++q) {
      if (q != p && tracks.tracks[q].is_visible(f)) {
        d.push_back(dist(tracks.tracks[p].positions[f], tracks.tracks[q].positions[f]));
      }
    }
    if (static_cast<int>(d.size()) < k) continue;
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    for (int r = 0; r < k; ++r) series[r].push_back(d[r]);
    if (frames_out) frames_out->push_back(f);
  }
  return series;
}

std::vector<int> covisible_frames(const TrackSet& tracks, int p, int q) {
  std::vector<int> f;
  for (int t = 0; t < tracks.frames(); ++t) {
    if (tracks.tracks[p].is_visible(t) && tracks.tracks[q].is_visible(t)) f.push_back(t);
  }
  return f;
}

// Calls visit(point, neighbor_or_rank, series, frames) for every usable pair.
template <typename Visit>
void for_each_pair(const TrackSet& tracks, const TrackerFGConfig& cfg, Visit&& visit) {
  if (cfg.mode == NeighborMode::anchor) {
    const int anchor = find_anchor_frame(tracks, cfg.neighbors);
    if (anchor < 0) return;
    const auto nn = knn_neighbors(tracks, anchor, cfg.neighbors);
    for (int p = 0; p < tracks.size(); ++p) {
      for (int q : nn[p]) {
        auto d = neighbor_distance_series(tracks, p, q);
        if (static_cast<int>(d.size()) < cfg.min_covisible) continue;
        visit(p, q, d, covisible_frames(tracks, p, q));
      }
    }
  } else {
    for (int p = 0; p < tracks.size(); ++p) {
      std::vector<int> frames;
      auto series = ranked_series(tracks, p, cfg.neighbors, &frames);
      for (int r = 0; r < cfg.neighbors; ++r) {
        if (static_cast<int>(series[r].size()) < cfg.min_covisible) continue;
        visit(p, r, series[r], frames);
      }
    }
  }
}

}  // namespace

ObjectDeviation object_inconsistency(const TrackSet& tracks, const TrackerFGConfig& cfg) {
  cfg.validate();
  ObjectDeviation out;
  std::vector<double> point_sum(tracks.size(), 0.0);
  std::vector<int> point_pairs(tracks.size(), 0);
  for_each_pair(tracks, cfg, [&](int p, int, const std::vector<double>& d, const auto&) {
    const auto smoothed = moving_average(d, cfg.window);
    point_sum[p] += track_deviation(d, smoothed);
    ++point_pairs[p];
  });
  double acc = 0;
  for (int p = 0; p < tracks.size(); ++p) {
    if (point_pairs[p] == 0) continue;
    acc += point_sum[p] / point_pairs[p];
    ++out.points_used;
    out.pairs_used += point_pairs[p];
  }
  if (out.points_used > 0) out.inconsistency = acc / out.points_used;
  return out;
}

std::optional<double> tracker_fg_from_tracks(const std::vector<TrackSet>& objects,
                                             const TrackerFGConfig& cfg,
                                             std::vector<double>* per_object) {
  double acc = 0;
  int used = 0;
  for (std::size_t n = 0; n < objects.size(); ++n) {
    const ObjectDeviation d = object_inconsistency(objects[n], cfg);
    if (!d.usable()) {
      spdlog::warn("object {} has too few co-visible tracks; skipped", n);
      continue;
    }
    acc += d.inconsistency;
    ++used;
    if (per_object) per_object->push_back(d.inconsistency);
  }
  if (used == 0) return std::nullopt;
  return acc / used;
}

double normalize_inconsistency(double inconsistency, double sigma) {
  if (!(inconsistency >= 0)) throw InvalidInput("inconsistency must be >= 0");
  return std::exp(-inconsistency / sigma);
}

double vb_sc_score(const FrameSequence& frames, backends::Embedder& embedder,
                   std::string_view video_id) {
  return vb_bg_score(frames, embedder, video_id);
}

Preference fg_pair_verdict(const ForegroundScore& a, const ForegroundScore& b,
                           std::string_view id_a, std::string_view id_b) {
  const bool has_a = a.objects_found > 0;
  const bool has_b = b.objects_found > 0;
  if (has_a != has_b) return has_a ? Preference::a : Preference::b;
  const double sa = has_a ? a.combined : a.vb_sc;
  const double sb = has_a ? b.combined : b.vb_sc;
  if (sa != sb) return sa > sb ? Preference::a : Preference::b;
  return id_a <= id_b ? Preference::a : Preference::b;
}

std::vector<TrackPlotRow> track_plot_rows(const std::vector<TrackSet>& objects,
                                          const TrackerFGConfig& cfg) {
  cfg.validate();
  std::vector<TrackPlotRow> rows;
  for (std::size_t n = 0; n < objects.size(); ++n) {
    for_each_pair(objects[n], cfg,
                  [&](int p, int q, const std::vector<double>& d, const std::vector<int>& f) {
                    const auto m = moving_average(d, cfg.window);
                    for (std::size_t t = 0; t < d.size(); ++t) {
                      rows.push_back({static_cast<int>(n), p, q, f[t], d[t], m[t],
                                      std::abs(d[t] - m[t])});
                    }
                  });
  }
  return rows;
}

std::string track_plot_csv(const std::vector<TrackPlotRow>& rows) {
  std::string out = "object,point,neighbor,frame,distance,moving_average,deviation\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{:.9g},{:.9g},{:.9g}\n", r.object, r.point, r.neighbor,
                       r.frame, r.distance, r.moving_average, r.deviation);
  }
  return out;
}

ForegroundScore score_foreground(Pipeline& pipeline, std::string_view video_id,
                                 const FrameSequence& frames, std::string_view prompt,
                                 const TrackerFGConfig& cfg, double grounding_threshold,
                                 std::vector<TrackSet>* object_tracks) {
  cfg.validate();
  ForegroundScore s;
  s.vb_sc = consecutive_similarity(pipeline.object_embeddings(video_id, frames));

  const auto objects = pipeline.object_masks(video_id, frames, prompt, grounding_threshold);
  const std::uint64_t video_seed = mix_seed(cfg.seed, stable_hash64(video_id));
  std::vector<TrackSet> tracks;
  for (std::size_t n = 0; n < objects.size(); ++n) {
    int start = -1;
    for (int f = 0; f < frames.size(); ++f) {
      if (mask_area(objects[n][f]) > 0) {
        start = f;
        break;
      }
    }
    if (start < 0) continue;
    const auto queries =
        sample_points_in_mask(objects[n][start], cfg.points_per_object, mix_seed(video_seed, n));
    if (static_cast<int>(queries.size()) < cfg.neighbors + 1) {
      spdlog::warn("object {} of '{}' is too small to track", n, video_id);
      continue;
    }
    TrackSet t = pipeline.tracks(video_id, frames, start, queries, fmt::format("object/{}", n));
    t.object_index = static_cast<int>(n);
    tracks.push_back(std::move(t));
  }
  const auto inconsistency = tracker_fg_from_tracks(tracks, cfg, &s.per_object);
  if (inconsistency) {
    s.objects_found = static_cast<int>(s.per_object.size());
    s.tracker_fg_inconsistency = *inconsistency;
    s.tracker_fg = normalize_inconsistency(*inconsistency, cfg.sigma);
    s.combined = 0.5 * (s.vb_sc + s.tracker_fg);
  } else {
    s.tracker_fg_inconsistency = std::numeric_limits<double>::quiet_NaN();
    s.tracker_fg = std::numeric_limits<double>::quiet_NaN();
    s.combined = s.vb_sc;
  }
  if (object_tracks) *object_tracks = std::move(tracks);
  return s;
}

}  // namespace dyneval
