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

#include <random>

#include <gtest/gtest.h>

#include "dyneval/backend_factory.hpp"
#include "dyneval/backend_pool.hpp"
#include "dyneval/backends.hpp"
#include "dyneval/error.hpp"
#include "dyneval/external.hpp"
#include "dyneval/hashing.hpp"
#include "dyneval/local_backends.hpp"
#include "dyneval/morphology.hpp"
#include "dyneval/payload.hpp"
#include "dyneval/pyramid.hpp"
#include "dyneval/recording.hpp"
#include "dyneval/synthetic.hpp"
#include "fixtures.hpp"

namespace dyneval {
namespace {

using namespace backends;

FrameSequence scene_frames(std::uint64_t seed) {
  synthetic::SceneOptions o;
  o.frames = 6;
  return synthetic::render_synthetic_scene(synthetic::make_scene(seed, o));
}

TEST(Payload, MasksTracksAndFramesRoundTrip) {
  std::mt19937_64 rng(3);
  MaskSequence masks;
  for (int i = 0; i < 3; ++i) masks.push_back(testing::random_mask(rng, 7, 5));
  EXPECT_EQ(payload::decode_masks(payload::encode_masks(masks)), masks);

  const TrackSet t = testing::random_tracks(rng, 4, 6, 50.0, 0.7);
  const TrackSet back = payload::decode_tracks(payload::encode_tracks(t));
  ASSERT_EQ(back.size(), 4);
  for (int p = 0; p < 4; ++p) {
    EXPECT_EQ(back.tracks[p].visible, t.tracks[p].visible);
    for (int f = 0; f < 6; ++f) {
      EXPECT_NEAR(back.tracks[p].positions[f].x, t.tracks[p].positions[f].x, 1e-4);
      EXPECT_NEAR(back.tracks[p].positions[f].y, t.tracks[p].positions[f].y, 1e-4);
    }
  }

  const auto frames = scene_frames(1);
  const auto fb = payload::decode_frames(payload::encode_frames(frames));
  ASSERT_EQ(fb.size(), frames.size());
  for (int i = 0; i < frames.size(); ++i) EXPECT_EQ(fb[i], frames[i]);

  const std::vector<std::vector<float>> emb{{1.f, 2.f}, {-3.f, 0.5f}};
  EXPECT_EQ(payload::decode_embeddings(payload::encode_embeddings(emb)), emb);
}

TEST(Payload, TruncatedBlockIsRejected) {
  auto bytes = payload::encode_frame(make_frame(4, 4, 9));
  bytes.resize(bytes.size() - 3);
  EXPECT_ANY_THROW(payload::decode_frame(bytes));
}

TEST(Morphology, DilateMatchesSquareWindowOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Mask m = testing::random_mask(rng, 13, 9, 0.1);
    const int side = 3;
    const Mask d = dilate(m, side);
    const Mask e = erode(m, side);
    for (int y = 0; y < 9; ++y) {
      for (int x = 0; x < 13; ++x) {
        bool any = false, all = true;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy, xx = x + dx;
            const bool inside = yy >= 0 && yy < 9 && xx >= 0 && xx < 13;
            const bool v = inside && m(yy, xx) != 0;
            any = any || v;
            all = all && v;
          }
        }
        EXPECT_EQ(d(y, x) != 0, any);
        EXPECT_EQ(e(y, x) != 0, all);
      }
    }
  }
}

TEST(Pyramid, HalvesExtentAndStopsAtFloor) {
  const RgbFrame f = make_frame(64, 48, 100);
  const RgbFrame h = pyr_down(f);
  EXPECT_EQ(h.width(), 32);
  EXPECT_EQ(h.height(), 24);
  EXPECT_EQ(h(5, 5, 1), 100);
  EXPECT_EQ(feasible_levels(64, 64, 4), 4);
  EXPECT_LT(feasible_levels(16, 16, 4), 4);
  Mask m = make_mask(8, 8);
  for (int y = 1; y < 7; ++y)
    for (int x = 1; x < 7; ++x) m(y, x) = 1;
  const Mask dm = downscale_mask(m, 1);
  EXPECT_EQ(dm.width(), 4);
  EXPECT_EQ(dm(1, 1), 1);
  EXPECT_EQ(dm(2, 2), 1);
  EXPECT_EQ(dm(0, 0), 0);
  Mask dot = make_mask(8, 8);
  dot(4, 4) = 1;
  EXPECT_EQ(mask_area(downscale_mask(dot, 1)), 0u);  // blurred below one half
}

TEST(LocalBackends, ShiftBlendRecoversGlobalShift) {
  synthetic::SceneOptions o;
  o.camera_dx = 4;
  o.sprite_count = 0;
  const auto frames = synthetic::render_synthetic_scene(synthetic::make_scene(2, o));
  const auto [dx, dy] = ShiftBlendInterpolator::estimate_shift(frames[0], frames[2], 12);
  EXPECT_EQ(std::abs(dx), 8);
  EXPECT_EQ(dy, 0);
}

TEST(LocalBackends, CosineMatchesDefinition) {
  const std::vector<float> a{1, 0, 0}, b{1, 1, 0};
  EXPECT_NEAR(cosine(a, b), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(cosine(a, a), 1.0, 1e-12);
}

TEST(LocalBackends, ThumbnailEmbeddingIsShapeChecked) {
  ThumbnailEmbedder e(4);
  const auto frames = scene_frames(5);
  const auto out = e.embed("v", frames);
  EXPECT_NO_THROW(check_embeddings(frames, out));
  EXPECT_EQ(out.size(), static_cast<std::size_t>(frames.size()));
}

TEST(Contracts, ShapeViolationsAreBackendErrors) {
  const auto frames = scene_frames(5);
  std::vector<Embedding> short_out(2, Embedding(48, 0.f));
  EXPECT_THROW(check_embeddings(frames, short_out), BackendError);
  const RgbFrame bad = make_frame(3, 3);
  const InterpolationRequest req{"v", 0, 1, frames[0], frames[2]};
  EXPECT_THROW(check_interpolation(req, bad), BackendError);
}

TEST(Recording, ReplayServesTapeWithoutInnerCalls) {
  const auto scene = synthetic::make_scene(3, {});
  auto live = count_backends(synthetic::oracle_backends(scene));
  auto tape = std::make_shared<Tape>();
  auto rec = record_backends(live, tape);
  const auto frames = synthetic::render_synthetic_scene(scene);
  const InterpolationRequest req{"v", 0, 1, frames[0], frames[2]};
  const RgbFrame a = rec.interpolator->interpolate(req);
  EXPECT_EQ(total_calls(live), 1u);

  auto replay = replay_backends(rec, Tape::from_json(tape->to_json()));
  EXPECT_EQ(replay.interpolator->id(), live.interpolator->id());
  EXPECT_EQ(replay.interpolator->interpolate(req), a);
  EXPECT_EQ(total_calls(live), 1u);

  const InterpolationRequest other{"v", 0, 3, frames[2], frames[4]};
  EXPECT_THROW(replay.interpolator->interpolate(other), NotRecorded);
}

TEST(Factory, BuildsLocalBackendsAndRejectsUnknownRoles) {
  const auto set = backends_from_config(
      {{"interpolator", {{"type", "shift_blend"}, {"search_radius", 5}}},
       {"scene_embedder", {{"type", "thumbnail"}}}});
  ASSERT_TRUE(set.interpolator);
  EXPECT_EQ(set.interpolator->id(), "shift-blend-r5");
  EXPECT_FALSE(set.tracker);
  const auto ids = backend_ids(set);
  EXPECT_EQ(ids.at("interpolator"), "shift-blend-r5");
  EXPECT_THROW(backends_from_config({{"painter", {{"type", "hold"}}}}), InvalidInput);
  EXPECT_THROW(backends_from_config({{"tracker", {{"type", "thumbnail"}}}}), InvalidInput);
}

TEST(Pool, BoundsConcurrency) {
  BackendPool pool(2);
  std::vector<std::thread> ts;
  for (int i = 0; i < 6; ++i) {
    ts.emplace_back([&, i] {
      pool.run("v" + std::to_string(i), [] {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        return 0;
      });
    });
  }
  for (auto& t : ts) t.join();
  EXPECT_LE(pool.peak_in_flight(), 2);
  EXPECT_THROW(BackendPool(0), InvalidInput);
}

class ProcessAdapterTest : public ::testing::Test {
 protected:
  std::shared_ptr<AdapterClient> client = make_adapter(std::string("process:") + DYNEVAL_FAKE_ADAPTER);
};

TEST_F(ProcessAdapterTest, InterpolatesThroughSubprocess) {
  auto interp = external_interpolator(client, "fake-mean");
  const RgbFrame a = make_frame(8, 6, 10), b = make_frame(8, 6, 21);
  const RgbFrame out = interp->interpolate({"vid", 0, 1, a, b});
  EXPECT_EQ(interp->id(), "fake-mean");
  EXPECT_EQ(out(2, 3, 1), 16);
}

TEST_F(ProcessAdapterTest, TracksEmbedsAndExtracts) {
  const auto frames = scene_frames(9);
  const std::vector<Point2> q{{3, 4}, {10, 12}};
  const TrackSet t = external_tracker(client, "fake-track")->track("vid", frames, 0, q);
  ASSERT_EQ(t.size(), 2);
  EXPECT_EQ(t.frames(), frames.size());
  EXPECT_DOUBLE_EQ(t.tracks[1].positions.back().x, 10.0);

  const auto emb = external_embedder(client, "fake-emb")->embed("vid", frames);
  EXPECT_EQ(emb, ThumbnailEmbedder(4).embed("vid", frames));

  const auto phrases = external_extractor(client, "fake-llm")->extract("a dog in a factory");
  ASSERT_EQ(phrases.size(), 2u);
  EXPECT_EQ(phrases[0].tag, MotionTag::dynamic_object);
  EXPECT_EQ(phrases[1].tag, MotionTag::static_object);
}

TEST_F(ProcessAdapterTest, FailuresSurfaceAsBackendErrors) {
  auto interp = external_interpolator(client, "fake", {{"fail", true}});
  const RgbFrame a = make_frame(4, 4);
  EXPECT_THROW(interp->interpolate({"vid", 0, 1, a, a}), BackendError);
  EXPECT_THROW(external_grounder(client, "fake")->ground("vid", a, std::vector<std::string>{"x"}),
               BackendError);
  EXPECT_THROW(make_adapter("ftp://nope"), InvalidInput);
}

TEST(Hashing, KnownDigests) {
  EXPECT_EQ(sha256_hex(std::string_view("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const std::vector<std::uint8_t> raw{0, 1, 2, 250, 255};
  EXPECT_EQ(base64_decode(base64_encode(raw)), raw);
  EXPECT_EQ(config_hash({{"a", 1}, {"b", 2}}), config_hash({{"b", 2}, {"a", 1}}));
}

}  // namespace
}  // namespace dyneval
