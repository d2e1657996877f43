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

#include "dyneval/camera_motion.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dyneval/error.hpp"
#include "dyneval/pipeline.hpp"

namespace dyneval {

std::vector<Point2> grid_queries(int width, int height, int n) {
  if (width <= 0 || height <= 0 || n < 1) throw InvalidInput("grid_queries: bad extent");
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      out.push_back({std::max(0.0, (i + 0.5) * width / n - 0.5),
                     std::max(0.0, (j + 0.5) * height / n - 0.5)});
    }
  }
  return out;
}

namespace {

double population_variance(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  // Centred on the first sample, so a constant series gives exactly 0.
  const double origin = v.front();
  double mean = 0;
  for (double x : v) mean += x - origin;
  mean /= static_cast<double>(v.size());
  double acc = 0;
  for (double x : v) acc += (x - origin - mean) * (x - origin - mean);
  return acc / static_cast<double>(v.size());
}

}  // namespace

double camera_motion_metric(const TrackSet& tracks) {
  if (tracks.size() == 0) throw InvalidInput("camera_motion_metric: no tracks");
  double acc = 0;
  std::vector<double> xs, ys;
  for (const auto& t : tracks.tracks) {
    xs.clear();
    ys.clear();
    for (const auto& p : t.positions) {
      if (std::isfinite(p.x) && std::isfinite(p.y)) {
        xs.push_back(p.x);
        ys.push_back(p.y);
      }
    }
    acc += population_variance(xs) + population_variance(ys);
  }
  return acc / tracks.size();
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw InvalidInput("percentile of an empty set");
  if (!(q >= 0 && q <= 100)) throw InvalidInput("percentile must lie in [0, 100]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1) * q / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

StaticSplit classify_static(std::span<const CameraMotionResult> results, double pct) {
  if (results.size() < 2) throw InvalidInput("classify_static needs at least two videos");
  if (results.size() < 10) {
    spdlog::warn("percentile split over only {} videos", results.size());
  }
  std::vector<double> c;
  for (const auto& r : results) {
    if (!std::isfinite(r.c_cam) || r.c_cam < 0) {
      throw InvalidInput(fmt::format("invalid camera motion for '{}'", r.video_id));
    }
    c.push_back(r.c_cam);
  }
  StaticSplit s;
  s.percentile = pct;
  s.tau_cam = percentile(c, pct);
  const auto [mn, mx] = std::minmax_element(c.begin(), c.end());
  s.degenerate = *mn == *mx;
  s.is_static.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) s.is_static[i] = !s.degenerate && c[i] <= s.tau_cam;
  return s;
}

CameraMotionResult camera_motion_for_video(Pipeline& pipeline, std::string_view video_id,
                                           const FrameSequence& frames, int grid) {
  const auto queries = grid_queries(frames.width(), frames.height(), grid);
  const TrackSet t =
      pipeline.tracks(video_id, frames, 0, queries, fmt::format("grid{}", grid));
  return {std::string(video_id), camera_motion_metric(t)};
}

nlohmann::json to_json(const CameraMotionResult& r) {
  return {{"video_id", r.video_id}, {"c_cam", r.c_cam}};
}

}  // namespace dyneval
