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

#include <nlohmann/json.hpp>

#include "dyneval/backends.hpp"

namespace dyneval::backends {

// Builds backends from the "backends" object of a run config:
//
//   {"interpolator":    {"type": "shift_blend", "search_radius": 8},
//    "scene_embedder":  {"type": "thumbnail", "grid": 4},
//    "grounder":        {"type": "external", "id": "gdino-swinb",
//                        "address": "http://localhost:9001", "params": {...}},
//    "tracker":         {"type": "replay", "as": "cotracker2"}, ...}
//
// Types: hold, shift_blend (interpolator); thumbnail (embedders); scripted
// (extractor, "phrases": [{phrase, tag}]); external (any role); replay (any
// role, refuses every call and reports the id given in "as"). Missing roles
// stay null.
BackendSet backends_from_config(const nlohmann::json& config);

// Ids of every configured backend keyed by role, for reports and cache keys.
nlohmann::json backend_ids(const BackendSet& set);

}  // namespace dyneval::backends
