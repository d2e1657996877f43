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

#include "dyneval/synthetic_dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dyneval/backend_factory.hpp"
#include "dyneval/error.hpp"
#include "dyneval/hashing.hpp"
#include "dyneval/local_backends.hpp"
#include "dyneval/random.hpp"
#include "dyneval/video_io.hpp"

namespace dyneval::synthetic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSearchRadius = 24;

struct Movement {
  const char* type;
  const char* movement;
};

constexpr Movement kMovements[] = {
    {"tracking camera", "pan left"},   {"drone camera", "dolly in"},
    {"steadicam", "orbit around"},     {"handheld camera", "handheld shake"},
    {"crane camera", "tilt up"},       {"dolly camera", "truck right"},
};

std::string subject_phrase(const SyntheticScene& scene) {
  std::string s;
  for (std::size_t i = 0; i < scene.sprites.size(); ++i) {
    if (i > 0) s += i + 1 == scene.sprites.size() ? " and a " : ", a ";
    s += scene.sprites[i].name;
  }
  return s;
}

// Probability that a rater prefers the video with quality advantage `delta`.
double preference(double delta, double temperature) {
  return 1.0 / (1.0 + std::exp(-delta / temperature));
}

}  // namespace

SyntheticDataset plan_dataset(const DatasetOptions& o) {
  if (o.models < 1 || o.prompts < 1 || o.generations < 1) {
    throw InvalidInput("synthetic dataset needs models, prompts and generations >= 1");
  }
  if (o.static_fraction < 0 || o.static_fraction > 1) {
    throw InvalidInput("static_fraction must lie in [0, 1]");
  }
  if (o.annotators < 1) throw InvalidInput("annotators must be >= 1");

  SyntheticDataset ds;
  ds.options = o;
  std::vector<std::string> models;
  for (int m = 0; m < o.models; ++m) models.push_back(fmt::format("model-{:02d}", m));

  const int total = o.models * o.prompts * o.generations;
  std::vector<char> still(static_cast<std::size_t>(total), 0);
  const int n_static = static_cast<int>(std::lround(o.static_fraction * total));
  std::fill_n(still.begin(), n_static, 1);
  Rng layout(mix_seed(o.seed, 11));
  layout.shuffle(still);

  std::vector<PromptEntry> prompts;
  std::vector<VideoRecord> videos;
  int slot = 0;
  for (int p = 0; p < o.prompts; ++p) {
    const std::string prompt_id = fmt::format("p{:04d}", p);
    Rng prng(mix_seed(o.seed, 1000 + p));
    const int sprites = 1 + static_cast<int>(prng.index(2));
    const Movement& mv = kMovements[prng.index(std::size(kMovements))];

    for (int m = 0; m < o.models; ++m) {
      for (int g = 0; g < o.generations; ++g, ++slot) {
        const std::string id = fmt::format("m{:02d}-p{:04d}-g{}", m, p, g);
        Rng vr(mix_seed(o.seed, stable_hash64(id)));
        // Quality rank r in [0, 1): later models are worse, generations jitter.
        const double r = (m + vr.unit()) / o.models;

        SceneOptions so;
        so.width = o.width;
        so.height = o.height;
        so.frames = o.frames;
        so.sprite_count = sprites;
        so.sprite_radius = std::max(4.0, std::min(o.width, o.height) / 8.0);
        so.sprite_speed = 1.0;
        so.deformation_amplitude = o.max_deformation * r;
        if (still[slot]) {
          so.camera_dx = 0;
          so.camera_dy = 0;
        } else {
          // Multiples of 8 px keep the per-pair shift integral on every
          // pyramid level, where shift-and-blend is exact on the background.
          so.camera_dx = 8;
          so.camera_dy = 8 * static_cast<int>(vr.index(2));
        }
        VideoPlan plan;
        plan.scene = make_scene(mix_seed(o.seed, stable_hash64(id) + 1), so);
        plan.deformation = so.deformation_amplitude;
        plan.is_static = still[slot] != 0;
        plan.flicker = std::round(o.max_flicker * r);
        if (plan.flicker > 0) {
          Flicker f;
          // Large enough to survive the coarsest pyramid level, clear of the
          // frame border where camera motion uncovers content.
          const int side = std::max(4, std::min(o.width, o.height) / 3);
          const int margin = std::min(o.width, o.height) / 8;
          f.x0 = margin + static_cast<int>(vr.index(static_cast<std::uint64_t>(
                              std::max(1, o.width - side - 2 * margin))));
          f.y0 = margin + static_cast<int>(vr.index(static_cast<std::uint64_t>(
                              std::max(1, o.height - side - 2 * margin))));
          f.x1 = f.x0 + side;
          f.y1 = f.y0 + side;
          f.amplitude = static_cast<int>(plan.flicker);
          plan.scene.flicker = f;
        }

        VideoRecord rec;
        rec.video_id = id;
        rec.model_id = models[static_cast<std::size_t>(m)];
        rec.prompt_id = prompt_id;
        rec.generation_index = g;
        rec.frame_count = o.frames;
        rec.width = o.width;
        rec.height = o.height;
        rec.fps = 8.0;
        rec.source_uri = "videos/" + id + ".y4m";
        videos.push_back(rec);
        ds.plans.emplace(id, std::move(plan));
      }
    }
    const SyntheticScene& first = ds.plans.at(fmt::format("m00-p{:04d}-g0", p)).scene;
    PromptEntry pe;
    pe.id = prompt_id;
    pe.text = fmt::format("A {} moves across a patterned wall while the {} performs a {}.",
                          subject_phrase(first), mv.type, mv.movement);
    pe.metadata = {{"camera", {{"type", mv.type}, {"movement", mv.movement}}}};
    prompts.push_back(std::move(pe));
  }

  ds.manifest = DatasetManifest(models, std::move(prompts), std::move(videos));
  ds.manifest.validate();
  ds.pairs = build_pairs(ds.manifest, o.seed, o.generations);

  // Simulated raters: logistic preference on the injected degradation.
  Rng votes(mix_seed(o.seed, 77));
  const double t_bg = 4.0 * o.vote_noise;
  const double t_fg = 0.25 * o.vote_noise;
  for (const auto& pair : ds.pairs.pairs) {
    const VideoPlan& a = ds.plans.at(pair.video_a);
    const VideoPlan& b = ds.plans.at(pair.video_b);
    for (Dimension dim : {Dimension::background, Dimension::foreground}) {
      const double delta = dim == Dimension::background ? b.flicker - a.flicker
                                                        : b.deformation - a.deformation;
      const double pa = preference(delta, dim == Dimension::background ? t_bg : t_fg);
      Annotation ann{pair, dim, {}};
      for (int k = 0; k < o.annotators; ++k) {
        ann.votes.votes.push_back(votes.unit() < pa ? Choice::a : Choice::b);
      }
      ds.annotations.push_back(std::move(ann));
    }
  }
  return ds;
}

void write_dataset(const SyntheticDataset& ds, const fs::path& dir) {
  fs::create_directories(dir / "videos");
  for (const auto& v : ds.manifest.videos()) {
    write_y4m(dir / v.source_uri, render_synthetic_scene(ds.plans.at(v.video_id).scene), v.fps);
  }
  save_manifest(ds.manifest, dir / "manifest.json");
  std::ofstream out(dir / "annotations.json");
  if (!out) throw IoError("cannot write " + (dir / "annotations.json").string());
  out << canonical_json_text(annotations_to_json(ds.annotations));
}

RunConfig warm_oracle_cache(const SyntheticDataset& ds, const fs::path& cache_dir,
                            const RunConfig& base) {
  fs::create_directories(cache_dir);
  auto cache = std::make_shared<Cache>(cache_dir);
  json ids;
  for (const auto& v : ds.manifest.videos()) {
    const VideoPlan& plan = ds.plans.at(v.video_id);
    backends::BackendSet set = oracle_backends(plan.scene);
    // The oracle interpolator reproduces injected flicker exactly; a real
    // interpolator is needed for the background metrics to see it.
    set.interpolator = std::make_shared<backends::ShiftBlendInterpolator>(kSearchRadius);
    ids = backends::backend_ids(set);
    DatasetRunner runner(ds.manifest, base, set, cache);
    runner.set_frame_source([&plan](const VideoRecord&) { return render_synthetic_scene(plan.scene); });
    runner.background(v);
    runner.foreground(v);
    runner.camera_motion(v);
  }
  RunConfig out = base;
  out.backends = json::object();
  for (const auto& [role, id] : ids.items()) {
    if (id.is_string() && id.get<std::string>() != "none") {
      out.backends[role] = {{"type", "replay"}, {"as", id}};
    }
  }
  return out;
}

}  // namespace dyneval::synthetic
