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
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "dyneval/error.hpp"
#include "dyneval/foreground.hpp"
#include "dyneval/local_backends.hpp"
#include "dyneval/synthetic.hpp"
#include "fixtures.hpp"

namespace dyneval {
namespace {

TrackSet line_tracks(std::initializer_list<double> xs, int frames = 1) {
  TrackSet t;
  for (double x : xs) {
    Track tr;
    tr.positions.assign(frames, {x, 0.0});
    tr.visible.assign(frames, 1);
    t.tracks.push_back(tr);
  }
  return t;
}

TEST(Sampling, SinglePixelAndEmptyMask) {
  Mask m = make_mask(8, 8);
  EXPECT_TRUE(sample_points_in_mask(m, 4, 1).empty());
  m(3, 5) = 1;
  const auto pts = sample_points_in_mask(m, 1, 1);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0], (Point2{5, 3}));
}

TEST(Sampling, DistinctSeededAndUniformOverQuadrants) {
  Mask m = make_mask(16, 16, 1);
  const auto a = sample_points_in_mask(m, 40, 9);
  EXPECT_EQ(a, sample_points_in_mask(m, 40, 9));
  auto key = [](const Point2& p) { return p.y * 100 + p.x; };
  std::vector<double> keys;
  for (const auto& p : a) keys.push_back(key(p));
  std::sort(keys.begin(), keys.end());
  EXPECT_EQ(std::unique(keys.begin(), keys.end()), keys.end());

  // Chi-square over the four quadrants, pooled across 100 seeds.
  std::array<double, 4> counts{};
  for (std::uint64_t s = 0; s < 100; ++s) {
    for (const auto& p : sample_points_in_mask(m, 16, s)) {
      counts[(p.x >= 8 ? 1 : 0) + (p.y >= 8 ? 2 : 0)] += 1;
    }
  }
  const double expected = 1600.0 / 4;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 11.345);  // 3 dof, alpha 0.01
}

TEST(Knn, CollinearHandExample) {
  const auto n = knn_neighbors(line_tracks({0, 1, 3}), 0, 1);
  EXPECT_EQ(n, (std::vector<std::vector<int>>{{1}, {0}, {1}}));
}

TEST(Knn, TiesGoToLowerIndex) {
  const auto n = knn_neighbors(line_tracks({1, 0, 2}), 0, 1);
  EXPECT_EQ(n[0], std::vector<int>{1});
}

TEST(Knn, TooFewVisibleTracksIsInvalid) {
  EXPECT_THROW(knn_neighbors(line_tracks({0, 1}), 0, 2), InvalidInput);
}

TEST(Knn, MatchesAllPairsSort) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const TrackSet t = testing::random_tracks(rng, 50, 3, 50.0, 0.9);
    const int anchor = find_anchor_frame(t, 5);
    ASSERT_GE(anchor, 0);
    const auto got = knn_neighbors(t, anchor, 5);
    for (int p = 0; p < t.size(); ++p) {
      if (!t.tracks[p].is_visible(anchor)) {
        EXPECT_TRUE(got[p].empty());
        continue;
      }
      std::vector<std::pair<double, int>> all;
      for (int q = 0; q < t.size(); ++q) {
        if (q == p || !t.tracks[q].is_visible(anchor)) continue;
        const double dx = t.tracks[p].positions[anchor].x - t.tracks[q].positions[anchor].x;
        const double dy = t.tracks[p].positions[anchor].y - t.tracks[q].positions[anchor].y;
        all.push_back({dx * dx + dy * dy, q});
      }
      std::sort(all.begin(), all.end());
      std::vector<int> want;
      for (int i = 0; i < 5; ++i) want.push_back(all[i].second);
      EXPECT_EQ(got[p], want);
    }
  }
}

TEST(DistanceSeries, StaticRigidAndScripted) {
  TrackSet t = line_tracks({0, 5}, 4);
  EXPECT_EQ(neighbor_distance_series(t, 0, 1), std::vector<double>(4, 5.0));
  for (int f = 0; f < 4; ++f) {
    for (auto& tr : t.tracks) tr.positions[f].x += 3.0 * f;
  }
  EXPECT_EQ(neighbor_distance_series(t, 0, 1), std::vector<double>(4, 5.0));
  t.tracks[1].positions = {{3, 4}, {6, 8}, {0, 1}, {1, 1}};
  t.tracks[0].positions.assign(4, {0, 0});
  t.tracks[1].visible[2] = 0;
  const auto d = neighbor_distance_series(t, 0, 1);
  EXPECT_EQ(d, (std::vector<double>{5.0, 10.0, std::sqrt(2.0)}));
}

std::vector<double> brute_moving_average(const std::vector<double>& s, int w) {
  const int n = static_cast<int>(s.size()), h = w / 2;
  std::vector<double> out(s.size());
  for (int t = 0; t < n; ++t) {
    double sum = 0;
    int count = 0;
    for (int j = t - h; j <= t + h; ++j) {
      if (j < 0 || j >= n) continue;
      sum += s[j];
      ++count;
    }
    out[t] = sum / count;
  }
  return out;
}

TEST(MovingAverage, HandExamples) {
  const std::vector<double> s{0, 3, 0};
  EXPECT_EQ(moving_average(s, 3), (std::vector<double>{1.5, 1.0, 1.5}));
  const std::vector<double> c(9, 2.5);
  for (double v : moving_average(c, 5)) EXPECT_DOUBLE_EQ(v, 2.5);
  std::vector<double> impulse(21, 0.0);
  impulse[10] = 1.0;
  const auto m = moving_average(impulse, 5);
  for (int t = 0; t < 21; ++t) EXPECT_DOUBLE_EQ(m[t], std::abs(t - 10) <= 2 ? 0.2 : 0.0);
  EXPECT_THROW(moving_average(s, 4), InvalidInput);
}

TEST(MovingAverage, MatchesLoopReference) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(3 + trial % 20);
    for (auto& v : s) v = u(rng);
    const int w = 1 + 2 * (trial % 4);
    const auto got = moving_average(s, w);
    const auto want = brute_moving_average(s, w);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(TrackDeviation, HandAndRandom) {
  const std::vector<double> d{0, 2}, m{1, 1};
  EXPECT_DOUBLE_EQ(track_deviation(d, m), 1.0);
  EXPECT_DOUBLE_EQ(track_deviation(d, d), 0.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(10), b(10);
    for (int i = 0; i < 10; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
    }
    double want = 0;
    for (int i = 0; i < 10; ++i) want += std::abs(a[i] - b[i]);
    EXPECT_NEAR(track_deviation(a, b), want / 10, 1e-12);
  }
}

TrackerFGConfig small_config() {
  TrackerFGConfig cfg;
  cfg.points_per_object = 32;
  cfg.neighbors = 4;
  cfg.min_covisible = 4;
  return cfg;
}

TrackSet sprite_tracks(const synthetic::SyntheticScene& scene, int points, std::uint64_t seed) {
  const auto masks = synthetic::oracle_object_masks(scene);
  const auto queries = sample_points_in_mask(masks.at(0).at(0), points, seed);
  return synthetic::oracle_tracks(scene, 0, queries);
}

TEST(TrackerFG, RigidSpritesAreConsistent) {
  for (double rot : {0.0, 0.05}) {
    synthetic::SceneOptions o;
    o.sprite_radius = 10;
    o.rotation_rate = rot;
    const auto scene = synthetic::make_scene(4, o);
    const auto t = sprite_tracks(scene, 32, 1);
    const auto dev = object_inconsistency(t, small_config());
    ASSERT_TRUE(dev.usable());
    EXPECT_NEAR(dev.inconsistency, 0.0, 1e-9);
  }
}

TEST(TrackerFG, DeformationRaisesInconsistency) {
  double previous = -1;
  for (double a : {0.5, 1.0, 2.0, 4.0}) {
    synthetic::SceneOptions o;
    o.sprite_radius = 12;
    o.deformation_amplitude = a;
    const auto scene = synthetic::make_scene(6, o);
    const double v = object_inconsistency(sprite_tracks(scene, 32, 3), small_config()).inconsistency;
    EXPECT_GT(v, previous) << "amplitude " << a;
    previous = v;
  }
}

TEST(TrackerFG, ShiftAndRotationInvariance) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-30, 30), ang(0, 6.283185307179586);
  for (int trial = 0; trial < 20; ++trial) {
    TrackSet t = testing::random_tracks(rng, 20, 12, 40.0);
    const auto base = object_inconsistency(t, small_config());
    TrackSet shifted = t, rotated = t;
    for (int f = 0; f < 12; ++f) {
      const double dx = u(rng), dy = u(rng), th = ang(rng);
      for (int p = 0; p < 20; ++p) {
        shifted.tracks[p].positions[f].x += dx;
        shifted.tracks[p].positions[f].y += dy;
        const auto q = t.tracks[p].positions[f];
        rotated.tracks[p].positions[f] = {std::cos(th) * q.x - std::sin(th) * q.y,
                                          std::sin(th) * q.x + std::cos(th) * q.y};
      }
    }
    EXPECT_NEAR(object_inconsistency(shifted, small_config()).inconsistency, base.inconsistency,
                1e-9);
    EXPECT_NEAR(object_inconsistency(rotated, small_config()).inconsistency, base.inconsistency,
                1e-9);
  }
}

TEST(TrackerFG, ObjectMeanAndNormalization) {
  TrackSet rigid = line_tracks({0, 1, 2, 4, 7}, 10);
  TrackSet wobbly = rigid;
  for (int f = 0; f < 10; ++f) wobbly.tracks[4].positions[f].x += (f % 2) * 2.0;
  TrackerFGConfig cfg = small_config();
  cfg.neighbors = 2;
  std::vector<double> per;
  const auto all = tracker_fg_from_tracks({rigid, wobbly}, cfg, &per);
  ASSERT_TRUE(all.has_value());
  ASSERT_EQ(per.size(), 2u);
  EXPECT_DOUBLE_EQ(per[0], 0.0);
  EXPECT_DOUBLE_EQ(*all, per[1] / 2);
  EXPECT_DOUBLE_EQ(normalize_inconsistency(0.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(normalize_inconsistency(2.0, 2.0), std::exp(-1.0));
  EXPECT_FALSE(tracker_fg_from_tracks({line_tracks({0, 1}, 10)}, cfg).has_value());
}

ForegroundScore fg(int objects, double vb_sc, double combined) {
  ForegroundScore s;
  s.objects_found = objects;
  s.vb_sc = vb_sc;
  s.combined = combined;
  return s;
}

TEST(Verdict, NoObjectRules) {
  EXPECT_EQ(fg_pair_verdict(fg(2, 0.1, 0.1), fg(0, 0.9, 0.9)), Preference::a);
  EXPECT_EQ(fg_pair_verdict(fg(0, 0.9, 0.9), fg(1, 0.1, 0.1)), Preference::b);
  EXPECT_EQ(fg_pair_verdict(fg(0, 0.9, 0.0), fg(0, 0.8, 1.0)), Preference::a);
  EXPECT_EQ(fg_pair_verdict(fg(1, 0.0, 0.7), fg(1, 1.0, 0.75)), Preference::b);
  EXPECT_EQ(fg_pair_verdict(fg(1, 0.5, 0.5), fg(1, 0.5, 0.5), "v2", "v1"), Preference::b);
}

TEST(TrackPlot, CsvHasHeaderAndRows) {
  TrackSet t = line_tracks({0, 1, 2, 4, 7}, 10);
  TrackerFGConfig cfg = small_config();
  cfg.neighbors = 2;
  const auto rows = track_plot_rows({t}, cfg);
  EXPECT_EQ(rows.size(), 5u * 2u * 10u);
  const auto csv = track_plot_csv(rows);
  EXPECT_EQ(csv.rfind("object,point,neighbor,frame,distance,moving_average,deviation", 0), 0u);
}

}  // namespace
}  // namespace dyneval
