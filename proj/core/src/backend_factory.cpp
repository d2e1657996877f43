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

#include "dyneval/backend_factory.hpp"

#include <algorithm>

#include "dyneval/error.hpp"
#include "dyneval/external.hpp"
#include "dyneval/local_backends.hpp"
#include "dyneval/recording.hpp"
#include "dyneval/synthetic.hpp"

namespace dyneval::backends {

namespace {

using nlohmann::json;

std::string type_of(const json& spec, const std::string& role) {
  if (!spec.is_object() || !spec.contains("type")) {
    throw InvalidInput("backend '" + role + "' needs a \"type\"");
  }
  return spec.at("type").get<std::string>();
}

std::shared_ptr<AdapterClient> adapter_of(const json& spec, const std::string& role) {
  if (!spec.contains("address") || !spec.contains("id")) {
    throw InvalidInput("external backend '" + role + "' needs \"address\" and \"id\"");
  }
  return make_adapter(spec.at("address").get<std::string>());
}

[[noreturn]] void unknown(const std::string& role, const std::string& type) {
  throw InvalidInput("backend type '" + type + "' is not available for role '" + role + "'");
}

}  // namespace

BackendSet backends_from_config(const json& config) {
  static const char* kRoles[] = {"interpolator", "scene_embedder", "object_embedder",
                                 "grounder",     "propagator",     "segmenter",
                                 "tracker",      "extractor"};
  if (!config.is_object()) throw InvalidInput("\"backends\" must be an object");
  for (const auto& [role, _] : config.items()) {
    if (std::find(std::begin(kRoles), std::end(kRoles), role) == std::end(kRoles)) {
      throw InvalidInput("unknown backend role '" + role + "'");
    }
  }

  // Replay roles are collected first and built in one go.
  std::map<std::string, std::string> replay_ids;
  for (const auto& [role, spec] : config.items()) {
    if (type_of(spec, role) == "replay") {
      if (!spec.contains("as")) throw InvalidInput("replay backend '" + role + "' needs \"as\"");
      replay_ids[role] = spec.at("as").get<std::string>();
    }
  }
  BackendSet set = make_replay_backends(replay_ids);

  for (const auto& [role, spec] : config.items()) {
    const std::string type = type_of(spec, role);
    if (type == "replay") continue;
    const json params = spec.value("params", json::object());
    if (role == "interpolator") {
      if (type == "hold") {
        set.interpolator = std::make_shared<HoldInterpolator>();
      } else if (type == "shift_blend") {
        set.interpolator = std::make_shared<ShiftBlendInterpolator>(spec.value("search_radius", 8));
      } else if (type == "external") {
        set.interpolator = external_interpolator(adapter_of(spec, role), spec.at("id"), params);
      } else {
        unknown(role, type);
      }
    } else if (role == "scene_embedder" || role == "object_embedder") {
      std::shared_ptr<Embedder> e;
      if (type == "thumbnail") {
        e = std::make_shared<ThumbnailEmbedder>(spec.value("grid", 4), spec.value("centered", true));
      } else if (type == "external") {
        e = external_embedder(adapter_of(spec, role), spec.at("id"), params);
      } else {
        unknown(role, type);
      }
      (role == "scene_embedder" ? set.scene_embedder : set.object_embedder) = e;
    } else if (role == "extractor") {
      if (type == "scripted") {
        std::vector<TaggedPhrase> phrases;
        for (const auto& p : spec.value("phrases", json::array())) {
          phrases.push_back({p.at("phrase").get<std::string>(),
                             motion_tag_from_string(p.value("tag", std::string("dynamic")))});
        }
        set.extractor = std::make_shared<synthetic::ScriptedPhraseExtractor>(std::move(phrases));
      } else if (type == "external") {
        set.extractor = external_extractor(adapter_of(spec, role), spec.at("id"), params);
      } else {
        unknown(role, type);
      }
    } else if (type == "external") {
      auto client = adapter_of(spec, role);
      const std::string id = spec.at("id");
      if (role == "grounder") set.grounder = external_grounder(client, id, params);
      if (role == "propagator") set.propagator = external_propagator(client, id, params);
      if (role == "segmenter") set.segmenter = external_segmenter(client, id, params);
      if (role == "tracker") set.tracker = external_tracker(client, id, params);
    } else {
      unknown(role, type);
    }
  }
  return set;
}

json backend_ids(const BackendSet& s) {
  json j = json::object();
  auto add = [&](const char* role, const auto& p) {
    if (p) j[role] = p->id();
  };
  add("interpolator", s.interpolator);
  add("scene_embedder", s.scene_embedder);
  add("object_embedder", s.object_embedder);
  add("grounder", s.grounder);
  add("propagator", s.propagator);
  add("segmenter", s.segmenter);
  add("tracker", s.tracker);
  add("extractor", s.extractor);
  return j;
}

}  // namespace dyneval::backends
