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

// Foreground consistency: Tracker-FG, the neighbour-distance deviation of
// point tracks sampled inside each object, the object-feature baseline
// (VB-SC), and the pairwise verdict with its no-object rules.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyneval/backends.hpp"
#include "dyneval/types.hpp"

namespace dyneval {

class Pipeline;

enum class NeighborMode {
  anchor,     // k nearest tracks at the anchor frame, fixed for the video
  per_frame,  // r-th nearest visible track re-selected on every frame
};

struct TrackerFGConfig {
  int points_per_object = 64;
  int neighbors = 8;
  int window = 5;
  int min_covisible = 8;
  double sigma = 2.0;  // px; tracker_fg = exp(-inconsistency / sigma)
  NeighborMode mode = NeighborMode::anchor;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const TrackerFGConfig& cfg);
TrackerFGConfig tracker_fg_config_from_json(const nlohmann::json& j);

struct ForegroundScore {
  double tracker_fg_inconsistency = 0;  // px; NaN when no object was usable
  double tracker_fg = 0;                // NaN when no object was usable
  double vb_sc = 0;
  double combined = 0;                  // vb_sc alone when no object was usable
  int objects_found = 0;
  std::vector<double> per_object;       // inconsistency of each usable object
};

nlohmann::json to_json(const ForegroundScore& s);
ForegroundScore foreground_score_from_json(const nlohmann::json& j);

// Up to `count` distinct pixel centres drawn uniformly from the mask. With
// fewer mask pixels than `count`, every mask pixel is returned (warned).
std::vector<Point2> sample_points_in_mask(const Mask& mask, int count, std::uint64_t seed);

// First frame with at least k + 1 visible tracks, or -1.
int find_anchor_frame(const TrackSet& tracks, int k);

// For every track visible at the anchor frame, the k nearest other visible
// tracks at that frame, nearest first, ties to the lower index. Tracks not
// visible at the anchor get an empty list. Throws InvalidInput with fewer
// than k + 1 visible tracks.
std::vector<std::vector<int>> knn_neighbors(const TrackSet& tracks, int anchor_frame, int k);

// ||T_p - T_q|| on the frames where both are visible, in frame order.
std::vector<double> neighbor_distance_series(const TrackSet& tracks, int p, int q);

// Centred moving average with window w (odd). Near the ends the window is
// clipped to the available samples: out[t] = mean(s[max(0, t-h) .. min(n-1, t+h)]),
// h = w / 2.
std::vector<double> moving_average(std::span<const double> series, int window);

// Mean absolute difference of two equal-length series.
double track_deviation(std::span<const double> d, std::span<const double> smoothed);

struct ObjectDeviation {
  double inconsistency = 0;
  int points_used = 0;
  int pairs_used = 0;
  bool usable() const { return points_used > 0; }
};

// Mean over points of the mean deviation over the point's usable neighbour
// pairs. Pairs with fewer than min_covisible co-visible frames are skipped.
ObjectDeviation object_inconsistency(const TrackSet& tracks, const TrackerFGConfig& cfg);

// Mean inconsistency over usable objects; nullopt when none is usable.
std::optional<double> tracker_fg_from_tracks(const std::vector<TrackSet>& objects,
                                             const TrackerFGConfig& cfg,
                                             std::vector<double>* per_object = nullptr);

double normalize_inconsistency(double inconsistency, double sigma);

double vb_sc_score(const FrameSequence& frames, backends::Embedder& object_embedder,
                   std::string_view video_id = {});

enum class Preference { a, b };

// Foreground verdict: a video with objects beats one without; with no
// objects on either side VB-SC decides; otherwise the combined score. Exact
// ties go to the lexicographically smaller id.
Preference fg_pair_verdict(const ForegroundScore& a, const ForegroundScore& b,
                           std::string_view id_a = "a", std::string_view id_b = "b");

// One row of the per-object deviation time series.
struct TrackPlotRow {
  int object = 0;
  int point = 0;
  int neighbor = 0;
  int frame = 0;
  double distance = 0;
  double moving_average = 0;
  double deviation = 0;
};

// Rows for every usable (point, neighbour) pair of every object.
std::vector<TrackPlotRow> track_plot_rows(const std::vector<TrackSet>& objects,
                                          const TrackerFGConfig& cfg);
std::string track_plot_csv(const std::vector<TrackPlotRow>& rows);

// Tracks every object mask through the stage cache and scores the video.
// `grounding_threshold` must match the background configuration so both
// metrics share one object-mask cache entry.
ForegroundScore score_foreground(Pipeline& pipeline, std::string_view video_id,
                                 const FrameSequence& frames, std::string_view prompt,
                                 const TrackerFGConfig& cfg, double grounding_threshold = 0.35,
                                 std::vector<TrackSet>* object_tracks = nullptr);

}  // namespace dyneval
