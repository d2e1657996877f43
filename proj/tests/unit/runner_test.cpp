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

#include <cmath>

#include <gtest/gtest.h>

#include "dyneval/error.hpp"
#include "dyneval/local_backends.hpp"
#include "dyneval/recording.hpp"
#include "dyneval/runner.hpp"
#include "dyneval/synthetic_dataset.hpp"
#include "fixtures.hpp"

namespace dyneval {
namespace {

using nlohmann::json;
using namespace dyneval::testing;

synthetic::DatasetOptions tiny_options() {
  synthetic::DatasetOptions o;
  o.models = 2;
  o.prompts = 2;
  o.generations = 2;
  o.width = 48;
  o.height = 48;
  o.frames = 8;
  o.seed = 11;
  return o;
}

RunConfig fast_config() {
  RunConfig cfg;
  cfg.foreground.points_per_object = 32;
  cfg.foreground.neighbors = 4;
  cfg.foreground.min_covisible = 4;
  cfg.camera_grid = 4;
  return cfg;
}

TEST(RunConfig, Validation) {
  EXPECT_THROW(run_config_from_json(json::array()), InvalidInput);
  EXPECT_THROW(run_config_from_json({{"camera_grid", 0}}), InvalidInput);
  EXPECT_THROW(run_config_from_json({{"max_in_flight", 0}}), InvalidInput);
  EXPECT_THROW(run_config_from_json({{"camera_grid", "x"}}), InvalidInput);
  EXPECT_THROW(run_config_from_json({{"background", {{"pyramid", {{"raw_weights", {0, 0}}}}}}}), InvalidInput);
  const RunConfig d = run_config_from_json(json::object());
  EXPECT_EQ(d.camera_grid, 16);
  EXPECT_EQ(d.max_in_flight, 4);
}

TEST(RunConfig, RoundTrip) {
  RunConfig cfg = fast_config();
  cfg.backends = {{"tracker", {{"type", "replay"}, {"as", "t1"}}}};
  const json j = to_json(cfg);
  EXPECT_EQ(to_json(run_config_from_json(j)), j);
}

TEST(RunConfig, MissingFileIsIoError) {
  EXPECT_THROW(load_run_config("/nonexistent/run.json"), IoError);
}

TEST(SyntheticDataset, PlanShape) {
  synthetic::DatasetOptions o;
  o.models = 10;
  o.prompts = 10;
  o.generations = 3;
  o.seed = 3;
  const auto ds = synthetic::plan_dataset(o);
  EXPECT_EQ(ds.manifest.videos().size(), 300u);
  EXPECT_EQ(ds.plans.size(), 300u);
  int still = 0;
  for (const auto& [id, plan] : ds.plans) {
    still += plan.is_static;
    if (plan.is_static) {
      EXPECT_EQ(plan.scene.camera_dx, 0);
      EXPECT_EQ(plan.scene.camera_dy, 0);
    }
  }
  EXPECT_EQ(still, 30);
  EXPECT_EQ(ds.pairs.count(PairType::inter), 450);
  EXPECT_EQ(ds.pairs.count(PairType::intra), 300);
  EXPECT_EQ(ds.annotations.size(), 2 * ds.pairs.pairs.size());

  const auto again = synthetic::plan_dataset(o);
  EXPECT_EQ(manifest_to_json(again.manifest), manifest_to_json(ds.manifest));
  EXPECT_EQ(annotations_to_json(again.annotations), annotations_to_json(ds.annotations));
}

TEST(SyntheticDataset, RejectsBadOptions) {
  auto o = tiny_options();
  o.static_fraction = 1.5;
  EXPECT_THROW(synthetic::plan_dataset(o), InvalidInput);
}

class RunnerTest : public ::testing::Test {
 protected:
  void SetUp() override { ds = synthetic::plan_dataset(tiny_options()); }

  DatasetRunner::FrameSource source() {
    return [this](const VideoRecord& v) {
      ++renders;
      return synthetic::render_synthetic_scene(ds.plans.at(v.video_id).scene);
    };
  }

  synthetic::SyntheticDataset ds;
  int renders = 0;
  TempDir dir{"runner"};
};

TEST_F(RunnerTest, ScoreMemoSkipsEveryBackend) {
  const auto& v = ds.manifest.videos().front();
  auto counted = backends::count_backends(synthetic::oracle_backends(ds.plans.at(v.video_id).scene));
  auto cache = std::make_shared<Cache>(dir.path());
  DatasetRunner runner(ds.manifest, fast_config(), counted, cache);
  runner.set_frame_source(source());

  const BackgroundScore first = runner.background(v);
  runner.foreground(v);
  EXPECT_GT(backends::total_calls(counted), 0u);
  EXPECT_EQ(renders, 1);

  const auto before = backends::total_calls(counted);
  const BackgroundScore second = runner.background(v);
  EXPECT_EQ(backends::total_calls(counted), before);
  EXPECT_EQ(to_json(second).dump(), to_json(first).dump());

  // Intermediate results bypass the memo but still come from the stage cache.
  MsDebiasResult details;
  const BackgroundScore third = runner.background(v, &details);
  EXPECT_EQ(backends::total_calls(counted), before);
  EXPECT_DOUBLE_EQ(third.ms_debias, first.ms_debias);
}

TEST_F(RunnerTest, ConfigChangeInvalidatesTheMemo) {
  const auto& v = ds.manifest.videos().front();
  auto set = synthetic::oracle_backends(ds.plans.at(v.video_id).scene);
  auto cache = std::make_shared<Cache>(dir.path());
  RunConfig a = fast_config();
  DatasetRunner ra(ds.manifest, a, set, cache);
  ra.set_frame_source(source());
  ra.camera_motion(v);

  RunConfig b = a;
  b.camera_grid = 6;
  auto counted = backends::count_backends(set);
  DatasetRunner rb(ds.manifest, b, counted, cache);
  rb.set_frame_source(source());
  rb.camera_motion(v);
  EXPECT_GT(backends::total_calls(counted), 0u);
}

TEST_F(RunnerTest, WarmCacheReplaysWithoutBackends) {
  const RunConfig replay = synthetic::warm_oracle_cache(ds, dir.path(), fast_config());
  ASSERT_TRUE(replay.backends.contains("tracker"));
  EXPECT_EQ(replay.backends.at("tracker").at("type"), "replay");

  DatasetRunner runner(ds.manifest, replay, dir.path());
  runner.set_frame_source(source());
  const auto bg = runner.background_all();
  const auto fg = runner.foreground_all();
  const auto cam = runner.camera_motion_all();
  EXPECT_EQ(bg.size(), ds.manifest.videos().size());
  EXPECT_EQ(fg.size(), ds.manifest.videos().size());
  EXPECT_EQ(cam.size(), ds.manifest.videos().size());

  // Same numbers as a fresh, uncached run on the real backends.
  const auto& v = ds.manifest.videos().back();
  auto set = synthetic::oracle_backends(ds.plans.at(v.video_id).scene);
  set.interpolator = std::make_shared<backends::ShiftBlendInterpolator>(24);
  DatasetRunner fresh(ds.manifest, fast_config(), set, nullptr);
  fresh.set_frame_source(source());
  EXPECT_EQ(to_json(fresh.background(v)).dump(), to_json(bg.at(v.video_id)).dump());
  EXPECT_EQ(to_json(fresh.foreground(v)).dump(), to_json(fg.at(v.video_id)).dump());

  // Detailed requests need stages the cache holds; a cold stage would throw.
  MsDebiasResult details;
  EXPECT_NO_THROW(runner.background(v, &details));
}

TEST_F(RunnerTest, ReplayWithoutCacheRefusesToCompute) {
  const RunConfig replay = synthetic::warm_oracle_cache(ds, dir.path() / "warm", fast_config());
  TempDir cold("cold");
  DatasetRunner runner(ds.manifest, replay, cold.path());
  runner.set_frame_source(source());
  EXPECT_THROW(runner.camera_motion(ds.manifest.videos().front()), NotRecorded);
}

TEST_F(RunnerTest, DecodesFromManifestWithoutFrameSource) {
  synthetic::write_dataset(ds, dir.path());
  const DatasetManifest m = load_manifest(dir.path() / "manifest.json");
  auto set = synthetic::oracle_backends(ds.plans.at(m.videos().front().video_id).scene);
  DatasetRunner runner(m, fast_config(), set, nullptr);
  const auto r = runner.camera_motion(m.videos().front());
  EXPECT_TRUE(std::isfinite(r.c_cam));
}

}  // namespace
}  // namespace dyneval
