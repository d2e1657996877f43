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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyneval/types.hpp"

namespace dyneval {

struct PromptEntry {
  std::string id;
  std::string text;
  nlohmann::json metadata = nlohmann::json::object();
};

// Dataset bookkeeping: prompts, videos and the models that produced them.
// Immutable after load; safe to share between threads.
class DatasetManifest {
 public:
  DatasetManifest() = default;
  DatasetManifest(std::vector<std::string> models,
                  std::vector<PromptEntry> prompts,
                  std::vector<VideoRecord> videos);

  const std::vector<std::string>& models() const { return models_; }
  const std::vector<PromptEntry>& prompts() const { return prompts_; }
  const std::vector<VideoRecord>& videos() const { return videos_; }

  const VideoRecord* find_video(std::string_view video_id) const;
  const PromptEntry* find_prompt(std::string_view prompt_id) const;
  const VideoRecord& video(std::string_view video_id) const;  // throws

  // Videos of one (model, prompt) cell, ordered by generation_index.
  std::vector<const VideoRecord*> generations(std::string_view model_id,
                                              std::string_view prompt_id) const;

  // Checks every invariant; throws InvalidInput naming the offending record.
  void validate() const;

  // Relative uris resolve against the directory the manifest was loaded from.
  std::filesystem::path resolve_uri(const VideoRecord& record) const;
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }
  const std::filesystem::path& base_dir() const { return base_dir_; }

 private:
  std::vector<std::string> models_;
  std::vector<PromptEntry> prompts_;
  std::vector<VideoRecord> videos_;
  std::filesystem::path base_dir_;
};

DatasetManifest manifest_from_json(const nlohmann::json& doc);
nlohmann::json manifest_to_json(const DatasetManifest& manifest);

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path);

// Canonical text: sorted keys, two-space indent, trailing newline.
std::string canonical_json_text(const nlohmann::json& doc);

// Camera-movement tag of a prompt, looked up in the prompt metadata in either
// the flat {"camera": {...}} or the nested {"metadata": {"camera": {...}}}
// layout.
std::optional<std::string> camera_movement_tag(const PromptEntry& prompt);

}  // namespace dyneval
