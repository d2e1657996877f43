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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "dyneval/camera_motion.hpp"
#include "dyneval/error.hpp"
#include "fixtures.hpp"

namespace dyneval {
namespace {

double brute_c_cam(const TrackSet& t) {
  double total = 0;
  for (const auto& tr : t.tracks) {
    const double n = tr.frames();
    double mx = 0, my = 0;
    for (const auto& p : tr.positions) {
      mx += p.x;
      my += p.y;
    }
    mx /= n;
    my /= n;
    double v = 0;
    for (const auto& p : tr.positions) v += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
    total += v / n;
  }
  return total / t.size();
}

TEST(CameraMotion, StaticTracksGiveZero) {
  std::mt19937_64 rng(1);
  TrackSet t = testing::random_tracks(rng, 5, 1);
  for (auto& tr : t.tracks) {
    tr.positions.assign(6, tr.positions[0]);
    tr.visible.assign(6, 1);
  }
  EXPECT_DOUBLE_EQ(camera_motion_metric(t), 0.0);
}

TEST(CameraMotion, LinearRampHandValue) {
  TrackSet t;
  for (int p = 0; p < 3; ++p) {
    Track tr;
    for (int f = 0; f < 4; ++f) tr.positions.push_back({double(f), 7.0 * p});
    tr.visible.assign(4, p == 1 ? 0 : 1);
    t.tracks.push_back(tr);
  }
  EXPECT_DOUBLE_EQ(camera_motion_metric(t), 1.25);
}

TEST(CameraMotion, MatchesLoopAndScalesQuadratically) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> off(-20, 20);
  for (int trial = 0; trial < 100; ++trial) {
    TrackSet t = testing::random_tracks(rng, 1 + trial % 9, 2 + trial % 7, 60.0, 0.5);
    const double c = camera_motion_metric(t);
    EXPECT_NEAR(c, brute_c_cam(t), 1e-9);
    TrackSet scaled = t, offset = t;
    const double dx = off(rng), dy = off(rng);
    for (auto& tr : scaled.tracks)
      for (auto& p : tr.positions) p = {p.x * 3, p.y * 3};
    for (auto& tr : offset.tracks)
      for (auto& p : tr.positions) p = {p.x + dx, p.y + dy};
    EXPECT_NEAR(camera_motion_metric(scaled), 9 * c, 1e-9 * std::max(1.0, c));
    EXPECT_NEAR(camera_motion_metric(offset), c, 1e-9 * std::max(1.0, c));
  }
}

TEST(CameraMotion, PerFrameShiftIncreasesSignal) {
  std::mt19937_64 rng(3);
  TrackSet t = testing::random_tracks(rng, 4, 1);
  for (auto& tr : t.tracks) {
    tr.positions.assign(5, tr.positions[0]);
    tr.visible.assign(5, 1);
  }
  TrackSet moved = t;
  for (auto& tr : moved.tracks)
    for (int f = 0; f < 5; ++f) tr.positions[f].x += 2 * f;
  EXPECT_GT(camera_motion_metric(moved), camera_motion_metric(t));
  EXPECT_DOUBLE_EQ(camera_motion_metric(moved), 8.0);
}

TEST(Percentile, TypeSevenInterpolation) {
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i + 1;
  EXPECT_NEAR(percentile(v, 10), 10.9, 1e-12);
  EXPECT_DOUBLE_EQ(percentile(v, 0), 1.0);
  EXPECT_DOUBLE_EQ(percentile(v, 100), 100.0);
  EXPECT_THROW(percentile({}, 10), InvalidInput);
  EXPECT_THROW(percentile(v, 101), InvalidInput);
}

TEST(ClassifyStatic, TenSmallestOfHundred) {
  std::vector<CameraMotionResult> rs;
  for (int i = 100; i >= 1; --i) rs.push_back({"v" + std::to_string(i), double(i)});
  const auto split = classify_static(rs);
  EXPECT_NEAR(split.tau_cam, 10.9, 1e-12);
  EXPECT_FALSE(split.degenerate);
  int n = 0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_EQ(split.is_static[i], rs[i].c_cam <= 10);
    n += split.is_static[i];
  }
  EXPECT_EQ(n, 10);
}

TEST(ClassifyStatic, AllEqualIsDegenerate) {
  std::vector<CameraMotionResult> rs(7, {"v", 4.0});
  const auto split = classify_static(rs);
  EXPECT_TRUE(split.degenerate);
  EXPECT_EQ(std::count(split.is_static.begin(), split.is_static.end(), true), 0);
}

TEST(GridQueries, CoversFrameUniformly) {
  const auto q = grid_queries(64, 32, 16);
  ASSERT_EQ(q.size(), 256u);
  for (const auto& p : q) {
    EXPECT_GE(p.x, 0);
    EXPECT_LT(p.x, 64);
    EXPECT_GE(p.y, 0);
    EXPECT_LT(p.y, 32);
  }
  EXPECT_DOUBLE_EQ(q[1].x - q[0].x, 4.0);
}

}  // namespace
}  // namespace dyneval
