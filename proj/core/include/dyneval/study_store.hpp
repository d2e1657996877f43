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

// Embedded SQLite persistence for the annotation study. One connection,
// serialized by a mutex; every multi-statement operation runs in its own
// transaction, so concurrent fetches never over-serve a pair.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyneval/study.hpp"

struct sqlite3;

namespace dyneval::study {

struct WorkerRecord {
  std::string worker_id;
  Qualification qualification;
  int approved_hits = 0;
  int rejected_hits = 0;
};

nlohmann::json to_json(const WorkerRecord& w);

struct StoreOptions {
  int target_votes = 3;            // accepted votes wanted per payload pair
  double compensation_per_hit = 5.0;
  std::string currency = "USD";
  std::uint64_t seed = 0;          // HIT seeds derive from this and a counter
};

class StudyStore {
 public:
  // `path` may be ":memory:".
  explicit StudyStore(const std::string& path, StoreOptions options = {});
  ~StudyStore();
  StudyStore(const StudyStore&) = delete;
  StudyStore& operator=(const StudyStore&) = delete;

  // Pool management. Re-adding a known pair id is a no-op.
  void add_payload_pairs(const std::vector<StudyPair>& pairs);
  void set_gold_pairs(const std::vector<GoldPair>& gold);
  void set_sanity_items(const std::vector<SanityItem>& sanity);
  void set_qualification_test(const QualificationTest& test);
  std::optional<QualificationTest> qualification_test() const;

  WorkerRecord record_qualification(const std::string& worker_id, const Qualification& q);
  std::optional<WorkerRecord> worker(const std::string& worker_id) const;

  // Returns the worker's open HIT if there is one, otherwise assembles a new
  // HIT from the least-served eligible pairs. A worker never receives the
  // same payload pair twice. Throws InvalidInput when the worker is not
  // qualified or the pools are exhausted.
  Hit assign_hit(const std::string& worker_id);
  std::optional<Hit> find_hit(const std::string& hit_id) const;

  // Scores and stores a response. A second submission for the same HIT
  // returns the stored result unchanged.
  HitResponse submit_response(const std::string& hit_id, const ResponseSubmission& response);

  // Accepted payload votes as harness annotations (consistent snapshot).
  std::vector<Annotation> export_annotations() const;

  // pair_id -> number of HITs that served it.
  std::vector<std::pair<std::string, int>> serve_counts() const;
  nlohmann::json stats() const;

 private:
  class Tx;
  void exec(const char* sql) const;

  sqlite3* db_ = nullptr;
  StoreOptions options_;
  mutable std::mutex mu_;
};

}  // namespace dyneval::study
