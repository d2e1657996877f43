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

#include "dyneval/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "dyneval/cache.hpp"
#include "dyneval/error.hpp"

namespace dyneval {

using nlohmann::json;

namespace {

std::string describe(const VideoRecord& v) {
  std::ostringstream os;
  os << "video '" << v.video_id << "' (model '" << v.model_id << "', prompt '"
     << v.prompt_id << "', generation " << v.generation_index << ")";
  return os.str();
}

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw InvalidInput(where + ": missing key '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(where + ": key '" + key + "': " + e.what());
  }
}

}  // namespace

DatasetManifest::DatasetManifest(std::vector<std::string> models,
                                 std::vector<PromptEntry> prompts,
                                 std::vector<VideoRecord> videos)
    : models_(std::move(models)),
      prompts_(std::move(prompts)),
      videos_(std::move(videos)) {}

const VideoRecord* DatasetManifest::find_video(std::string_view video_id) const {
  for (const auto& v : videos_) {
    if (v.video_id == video_id) return &v;
  }
  return nullptr;
}

const PromptEntry* DatasetManifest::find_prompt(std::string_view prompt_id) const {
  for (const auto& p : prompts_) {
    if (p.id == prompt_id) return &p;
  }
  return nullptr;
}

const VideoRecord& DatasetManifest::video(std::string_view video_id) const {
  const VideoRecord* v = find_video(video_id);
  if (v == nullptr) {
    throw InvalidInput("manifest: unknown video id '" + std::string(video_id) + "'");
  }
  return *v;
}

std::vector<const VideoRecord*> DatasetManifest::generations(
    std::string_view model_id, std::string_view prompt_id) const {
  std::vector<const VideoRecord*> out;
  for (const auto& v : videos_) {
    if (v.model_id == model_id && v.prompt_id == prompt_id) out.push_back(&v);
  }
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
    return a->generation_index < b->generation_index;
  });
  return out;
}

std::filesystem::path DatasetManifest::resolve_uri(const VideoRecord& record) const {
  std::filesystem::path uri(record.source_uri);
  if (uri.is_absolute() || base_dir_.empty()) return uri;
  return base_dir_ / uri;
}

void DatasetManifest::validate() const {
  std::set<std::string> model_set;
  for (const auto& m : models_) {
    if (m.empty()) throw InvalidInput("manifest: empty model id");
    if (!model_set.insert(m).second) {
      throw InvalidInput("manifest: duplicate model '" + m + "'");
    }
  }
  std::set<std::string> prompt_set;
  for (const auto& p : prompts_) {
    if (p.id.empty()) throw InvalidInput("manifest: empty prompt id");
    if (!prompt_set.insert(p.id).second) {
      throw InvalidInput("manifest: duplicate prompt '" + p.id + "'");
    }
  }

  std::set<std::string> ids;
  std::set<std::tuple<std::string, std::string, int>> identities;
  std::map<std::pair<std::string, std::string>, std::vector<int>> cells;
  for (const auto& v : videos_) {
    if (!is_safe_path_component(v.video_id)) {
      throw InvalidInput("manifest: " + describe(v) +
                         ": video_id must match [A-Za-z0-9._-]+");
    }
    if (!ids.insert(v.video_id).second) {
      throw InvalidInput("manifest: duplicate video_id in " + describe(v));
    }
    if (!model_set.count(v.model_id)) {
      throw InvalidInput("manifest: dangling model reference in " + describe(v));
    }
    if (!prompt_set.count(v.prompt_id)) {
      throw InvalidInput("manifest: dangling prompt reference in " + describe(v));
    }
    if (v.generation_index < 0) {
      throw InvalidInput("manifest: negative generation_index in " + describe(v));
    }
    if (!identities.emplace(v.model_id, v.prompt_id, v.generation_index).second) {
      throw InvalidInput("manifest: duplicate video identity " + describe(v));
    }
    if (v.frame_count < 3) {
      throw InvalidInput("manifest: frame_count < 3 in " + describe(v));
    }
    if (v.width <= 0 || v.height <= 0) {
      throw InvalidInput("manifest: non-positive dimensions in " + describe(v));
    }
    if (!(v.fps > 0.0)) {
      throw InvalidInput("manifest: non-positive fps in " + describe(v));
    }
    cells[{v.model_id, v.prompt_id}].push_back(v.generation_index);
  }
  for (auto& [cell, gens] : cells) {
    std::sort(gens.begin(), gens.end());
    for (std::size_t i = 0; i < gens.size(); ++i) {
      if (gens[i] != static_cast<int>(i)) {
        throw InvalidInput("manifest: non-dense generation indices for model '" +
                           cell.first + "', prompt '" + cell.second + "'");
      }
    }
  }
}

DatasetManifest manifest_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidInput("manifest: top level must be an object");
  auto models = required<std::vector<std::string>>(doc, "models", "manifest");

  std::vector<PromptEntry> prompts;
  const json prompt_list = required<json>(doc, "prompts", "manifest");
  if (!prompt_list.is_array()) throw InvalidInput("manifest: 'prompts' must be a list");
  for (std::size_t i = 0; i < prompt_list.size(); ++i) {
    const std::string where = "manifest: prompts[" + std::to_string(i) + "]";
    const json& p = prompt_list[i];
    if (!p.is_object()) throw InvalidInput(where + ": must be an object");
    PromptEntry entry;
    entry.id = required<std::string>(p, "id", where);
    entry.text = required<std::string>(p, "text", where);
    entry.metadata = p.value("metadata", json::object());
    prompts.push_back(std::move(entry));
  }

  std::vector<VideoRecord> videos;
  const json video_list = required<json>(doc, "videos", "manifest");
  if (!video_list.is_array()) throw InvalidInput("manifest: 'videos' must be a list");
  for (std::size_t i = 0; i < video_list.size(); ++i) {
    const std::string where = "manifest: videos[" + std::to_string(i) + "]";
    const json& v = video_list[i];
    if (!v.is_object()) throw InvalidInput(where + ": must be an object");
    VideoRecord r;
    r.video_id = required<std::string>(v, "video_id", where);
    r.model_id = required<std::string>(v, "model_id", where);
    r.prompt_id = required<std::string>(v, "prompt_id", where);
    r.generation_index = required<int>(v, "generation_index", where);
    r.source_uri = required<std::string>(v, "uri", where);
    r.fps = required<double>(v, "fps", where);
    r.width = required<int>(v, "width", where);
    r.height = required<int>(v, "height", where);
    r.frame_count = required<int>(v, "frame_count", where);
    videos.push_back(std::move(r));
  }

  DatasetManifest manifest(std::move(models), std::move(prompts), std::move(videos));
  manifest.validate();
  return manifest;
}

json manifest_to_json(const DatasetManifest& manifest) {
  json prompts = json::array();
  for (const auto& p : manifest.prompts()) {
    prompts.push_back({{"id", p.id}, {"text", p.text}, {"metadata", p.metadata}});
  }
  json videos = json::array();
  for (const auto& v : manifest.videos()) {
    videos.push_back({{"video_id", v.video_id},
                      {"model_id", v.model_id},
                      {"prompt_id", v.prompt_id},
                      {"generation_index", v.generation_index},
                      {"uri", v.source_uri},
                      {"fps", v.fps},
                      {"width", v.width},
                      {"height", v.height},
                      {"frame_count", v.frame_count}});
  }
  return {{"models", manifest.models()}, {"prompts", prompts}, {"videos", videos}};
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("manifest " + path.string() + ": parse failure: " + e.what());
  }
  DatasetManifest manifest = manifest_from_json(doc);
  manifest.set_base_dir(path.parent_path());
  return manifest;
}

void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << canonical_json_text(manifest_to_json(manifest));
  if (!out) throw IoError("short write on manifest " + path.string());
}

std::string canonical_json_text(const json& doc) { return doc.dump(2) + "\n"; }

std::optional<std::string> camera_movement_tag(const PromptEntry& prompt) {
  const json* camera = nullptr;
  const json& meta = prompt.metadata;
  if (meta.is_object()) {
    if (auto it = meta.find("camera"); it != meta.end() && it->is_object()) {
      camera = &*it;
    } else if (auto nested = meta.find("metadata");
               nested != meta.end() && nested->is_object()) {
      if (auto c = nested->find("camera"); c != nested->end() && c->is_object()) {
        camera = &*c;
      }
    }
  }
  if (camera == nullptr) return std::nullopt;
  auto movement = camera->find("movement");
  if (movement == camera->end() || !movement->is_string()) return std::nullopt;
  return movement->get<std::string>();
}

}  // namespace dyneval
