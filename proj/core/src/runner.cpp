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

#include "dyneval/runner.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "dyneval/backend_factory.hpp"
#include "dyneval/error.hpp"
#include "dyneval/hashing.hpp"
#include "dyneval/video_io.hpp"

namespace dyneval {

using nlohmann::json;

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("run config must be a JSON object");
  RunConfig cfg;
  try {
    cfg.backends = j.value("backends", json::object());
    if (j.contains("background")) cfg.background = background_config_from_json(j.at("background"));
    if (j.contains("foreground")) cfg.foreground = tracker_fg_config_from_json(j.at("foreground"));
    cfg.camera_grid = j.value("camera_grid", 16);
    cfg.max_in_flight = j.value("max_in_flight", 4);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("run config: ") + e.what());
  }
  if (cfg.camera_grid < 1) throw InvalidInput("camera_grid must be >= 1");
  if (cfg.max_in_flight < 1) throw InvalidInput("max_in_flight must be >= 1");
  cfg.background.validate();
  cfg.foreground.validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  return {{"backends", cfg.backends},
          {"background", to_json(cfg.background)},
          {"foreground", to_json(cfg.foreground)},
          {"camera_grid", cfg.camera_grid},
          {"max_in_flight", cfg.max_in_flight}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run config " + path.string());
  try {
    return run_config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

DatasetRunner::DatasetRunner(const DatasetManifest& manifest, const RunConfig& cfg,
                             const std::filesystem::path& cache_dir)
    : DatasetRunner(manifest, cfg, backends::backends_from_config(cfg.backends),
                    cache_dir.empty() ? nullptr : std::make_shared<Cache>(cache_dir)) {}

DatasetRunner::DatasetRunner(const DatasetManifest& manifest, const RunConfig& cfg,
                             backends::BackendSet backends, std::shared_ptr<Cache> cache)
    : manifest_(manifest),
      cfg_(cfg),
      pipeline_(std::move(backends), std::move(cache), cfg.max_in_flight) {}

const FrameSequence& DatasetRunner::frames(const VideoRecord& video) {
  if (decoded_id_ != video.video_id) {
    decoded_ = source_ ? source_(video) : decode_video(video, manifest_.resolve_uri(video));
    decoded_id_ = video.video_id;
  }
  return decoded_;
}

std::string DatasetRunner::prompt_text(const VideoRecord& video) const {
  const PromptEntry* p = manifest_.find_prompt(video.prompt_id);
  return p ? p->text : std::string();
}

json DatasetRunner::score_key(const char* metric, const VideoRecord& video) const {
  json key = {{"metric", metric},
              {"backends", backends::backend_ids(pipeline_.backends())},
              {"prompt", sha256_hex(prompt_text(video)).substr(0, 16)},
              {"frames", video.frame_count}};
  if (std::string_view(metric) == "background") key["config"] = to_json(cfg_.background);
  if (std::string_view(metric) == "foreground") {
    key["config"] = to_json(cfg_.foreground);
    key["grounding_threshold"] = cfg_.background.grounding_threshold;
  }
  if (std::string_view(metric) == "camera_motion") key["grid"] = cfg_.camera_grid;
  return key;
}

BackgroundScore DatasetRunner::background(const VideoRecord& video, MsDebiasResult* details) {
  const json key = score_key("background", video);
  if (!details) {
    if (auto hit = pipeline_.cached_score(video.video_id, key)) {
      return background_score_from_json(*hit);
    }
  }
  BackgroundScore s = score_background(pipeline_, video.video_id, frames(video),
                                       prompt_text(video), cfg_.background, details);
  pipeline_.store_score(video.video_id, key, to_json(s));
  return s;
}

ForegroundScore DatasetRunner::foreground(const VideoRecord& video, std::vector<TrackSet>* tracks) {
  const json key = score_key("foreground", video);
  if (!tracks) {
    if (auto hit = pipeline_.cached_score(video.video_id, key)) {
      return foreground_score_from_json(*hit);
    }
  }
  ForegroundScore s = score_foreground(pipeline_, video.video_id, frames(video),
                                       prompt_text(video), cfg_.foreground,
                                       cfg_.background.grounding_threshold, tracks);
  pipeline_.store_score(video.video_id, key, to_json(s));
  return s;
}

CameraMotionResult DatasetRunner::camera_motion(const VideoRecord& video) {
  const json key = score_key("camera_motion", video);
  if (auto hit = pipeline_.cached_score(video.video_id, key)) {
    return {video.video_id, hit->at("c_cam").get<double>()};
  }
  CameraMotionResult r =
      camera_motion_for_video(pipeline_, video.video_id, frames(video), cfg_.camera_grid);
  pipeline_.store_score(video.video_id, key, to_json(r));
  return r;
}

std::map<std::string, BackgroundScore> DatasetRunner::background_all() {
  std::map<std::string, BackgroundScore> out;
  for (const auto& v : manifest_.videos()) out[v.video_id] = background(v);
  return out;
}

std::map<std::string, ForegroundScore> DatasetRunner::foreground_all() {
  std::map<std::string, ForegroundScore> out;
  for (const auto& v : manifest_.videos()) out[v.video_id] = foreground(v);
  return out;
}

std::vector<CameraMotionResult> DatasetRunner::camera_motion_all() {
  std::vector<CameraMotionResult> out;
  out.reserve(manifest_.videos().size());
  for (const auto& v : manifest_.videos()) out.push_back(camera_motion(v));
  return out;
}

}  // namespace dyneval
