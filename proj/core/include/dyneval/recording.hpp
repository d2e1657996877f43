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

// Record/replay and call-counting wrappers around perception backends.
//
// A Recording* wrapper forwards every call to an inner backend and stores the
// serialized output on a Tape under a key derived from the request. A Replay*
// backend serves those outputs without any model and throws NotRecorded for
// requests that were never seen. Replay backends report the id of the
// recorded backend, so every cache key and every score computed through them
// is identical to the recorded run.
//
// make_replay_backends() builds the cache-only variant used by CI: backends
// that carry the configured ids and refuse every call. Pipelines whose stages
// are all cached never reach them.

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyneval/backends.hpp"

namespace dyneval::backends {

// Thread-safe key -> bytes store.
class Tape {
 public:
  void put(const std::string& key, std::vector<std::uint8_t> bytes);
  std::optional<std::vector<std::uint8_t>> get(const std::string& key) const;
  std::size_t size() const;

  // Round trip through JSON ({key: base64}), for fixtures on disk.
  nlohmann::json to_json() const;
  static std::shared_ptr<Tape> from_json(const nlohmann::json& j);

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<std::uint8_t>> entries_;
};

// Call counter shared by the wrappers.
class CallCount {
 public:
  std::uint64_t calls() const { return calls_.load(); }
  void reset() { calls_ = 0; }

 protected:
  void bump() { ++calls_; }

 private:
  std::atomic<std::uint64_t> calls_{0};
};

// Wraps every non-null member of `inner` with a recording wrapper writing
// into `tape`.
BackendSet record_backends(const BackendSet& inner, std::shared_ptr<Tape> tape);
// Replay backends with the same ids as `recorded`, serving from `tape`.
BackendSet replay_backends(const BackendSet& recorded, std::shared_ptr<Tape> tape);
// Wraps every member with a counter; counters are reachable through
// call_count(). Counting wrappers keep the inner id.
BackendSet count_backends(const BackendSet& inner);
// Total calls recorded by counting or recording wrappers in `set`.
std::uint64_t total_calls(const BackendSet& set);

// Ids for cache-only replay, keyed by role: interpolator, scene_embedder,
// object_embedder, grounder, propagator, segmenter, tracker, extractor.
BackendSet make_replay_backends(const std::map<std::string, std::string>& ids);

}  // namespace dyneval::backends
