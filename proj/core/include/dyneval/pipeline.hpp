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

// Stage cache shared by the metric pipelines. Each stage output is stored
// under (kind, video_id, hash) where the hash covers the stage name, its
// parameters and the ids of the backends that produced it. With every stage
// present in the cache a run makes no backend call at all.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyneval/backend_pool.hpp"
#include "dyneval/backends.hpp"
#include "dyneval/cache.hpp"
#include "dyneval/types.hpp"

namespace dyneval {

struct EdgeMapConfig;

class Pipeline {
 public:
  // `cache` may be null (everything recomputed, nothing stored).
  explicit Pipeline(backends::BackendSet backends, std::shared_ptr<Cache> cache = nullptr,
                    int max_in_flight = 4);

  const backends::BackendSet& backends() const { return backends_; }
  backends::BackendPool& pool() { return pool_; }
  Cache* cache() const { return cache_.get(); }

  // Raw interpolation error maps of one pyramid level.
  ErrorMapStack error_maps(std::string_view video_id, const FrameSequence& level_frames,
                           int level);
  // Auto-detected objects (edge family), level 0.
  std::vector<MaskSequence> auto_masks(std::string_view video_id, const FrameSequence& frames);
  // Edge maps of levels 0..levels-1, one per frame.
  std::vector<MaskSequence> edge_maps(std::string_view video_id, const FrameSequence& frames,
                                      int levels, const EdgeMapConfig& cfg);
  // Prompt-grounded objects (object family), level 0, one sequence per object.
  std::vector<MaskSequence> object_masks(std::string_view video_id, const FrameSequence& frames,
                                         std::string_view prompt, double threshold);
  std::vector<backends::Embedding> scene_embeddings(std::string_view video_id,
                                                    const FrameSequence& frames);
  std::vector<backends::Embedding> object_embeddings(std::string_view video_id,
                                                     const FrameSequence& frames);
  // Tracks of `queries` from `start_frame`. `label` distinguishes query
  // families (e.g. "object/2", "grid16") and the query coordinates are
  // hashed into the key.
  TrackSet tracks(std::string_view video_id, const FrameSequence& frames, int start_frame,
                  std::span<const Point2> queries, std::string_view label);

  // Final score documents.
  std::optional<nlohmann::json> cached_score(std::string_view video_id,
                                             const nlohmann::json& key) const;
  void store_score(std::string_view video_id, const nlohmann::json& key,
                   const nlohmann::json& score);

  // Stage keys, exposed so reports can cite them.
  nlohmann::json error_maps_key(int level) const;
  nlohmann::json auto_masks_key() const;
  nlohmann::json edge_maps_key(int level, const EdgeMapConfig& cfg) const;
  nlohmann::json object_masks_key(std::string_view prompt, double threshold) const;

 private:
  template <typename T, typename Compute, typename Encode, typename Decode>
  T cached(CacheKind kind, std::string_view video_id, const nlohmann::json& key,
           Compute&& compute, Encode&& encode, Decode&& decode);

  backends::BackendSet backends_;
  std::shared_ptr<Cache> cache_;
  backends::BackendPool pool_;
};

// Throws InvalidInput naming the role when `p` is null.
template <typename T>
T& require_backend(const std::shared_ptr<T>& p, std::string_view role) {
  if (!p) throw InvalidInput("no " + std::string(role) + " backend configured");
  return *p;
}

}  // namespace dyneval
