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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dyneval {

enum class CacheKind { error_maps, masks, edges, tracks, embeddings, scores };

std::string_view to_string(CacheKind kind);
CacheKind cache_kind_from_string(std::string_view name);

struct CacheKey {
  CacheKind kind;
  std::string video_id;
  std::string config_hash;
};

struct CacheStats {
  std::uint64_t puts = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t corrupt = 0;
};

// Content-addressed store of intermediate artifacts.
//
// Layout: <root>/<kind>/<video_id>/<config_hash>.bin with a <...>.sha256
// sidecar holding the hex digest of the payload. Payload and sidecar are each
// written to a temporary file and renamed into place while holding an
// exclusive lock on <...>.lock, so concurrent writers of one key replace the
// entry atomically (last writer wins) and readers never observe a payload
// paired with another writer's digest.
class Cache {
 public:
  explicit Cache(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  void put(const CacheKey& key, std::span<const std::uint8_t> payload);
  void put_text(const CacheKey& key, std::string_view text);

  // Returns the payload stored under exactly this key. A checksum mismatch or
  // missing sidecar is reported as absence with a logged warning.
  std::optional<std::vector<std::uint8_t>> get(const CacheKey& key) const;
  std::optional<std::string> get_text(const CacheKey& key) const;

  std::filesystem::path payload_path(const CacheKey& key) const;

  CacheStats stats() const;

 private:
  std::filesystem::path entry_dir(const CacheKey& key) const;

  std::filesystem::path root_;
  mutable std::atomic<std::uint64_t> puts_{0};
  mutable std::atomic<std::uint64_t> hits_{0};
  mutable std::atomic<std::uint64_t> misses_{0};
  mutable std::atomic<std::uint64_t> corrupt_{0};
};

// Video ids and config hashes become path components; this rejects anything
// outside [A-Za-z0-9._-] and the names "." and "..".
bool is_safe_path_component(std::string_view name);

}  // namespace dyneval
