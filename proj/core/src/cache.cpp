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

#include "dyneval/cache.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>
#include <iterator>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "dyneval/error.hpp"
#include "dyneval/hashing.hpp"

namespace dyneval {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kKindNames[] = {"error_maps", "masks",      "edges",
                                           "tracks",     "embeddings", "scores"};

// RAII flock(2) on a lock file next to the entry.
class FileLock {
 public:
  FileLock(const fs::path& path, bool exclusive) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cache: cannot open lock file " + path.string());
    while (::flock(fd_, exclusive ? LOCK_EX : LOCK_SH) != 0) {
      if (errno != EINTR) {
        ::close(fd_);
        throw IoError("cache: flock failed on " + path.string());
      }
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::string unique_suffix() {
  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream os;
  os << ".tmp." << ::getpid() << "." << std::hash<std::thread::id>{}(std::this_thread::get_id())
     << "." << counter.fetch_add(1);
  return os.str();
}

void write_file_synced(const fs::path& path, std::span<const std::uint8_t> bytes) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("cache: cannot create " + path.string());
  std::size_t written = 0;
  while (written < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw IoError("cache: write failed on " + path.string());
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

void atomic_replace(const fs::path& target, std::span<const std::uint8_t> bytes) {
  fs::path tmp = target;
  tmp += unique_suffix();
  write_file_synced(tmp, bytes);
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cache: rename into " + target.string() + " failed");
  }
}

std::optional<std::vector<std::uint8_t>> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

std::string_view to_string(CacheKind kind) {
  return kKindNames[static_cast<int>(kind)];
}

CacheKind cache_kind_from_string(std::string_view name) {
  for (int i = 0; i < 6; ++i) {
    if (kKindNames[i] == name) return static_cast<CacheKind>(i);
  }
  throw InvalidInput("unknown cache kind '" + std::string(name) + "'");
}

bool is_safe_path_component(std::string_view name) {
  if (name.empty() || name == "." || name == "..") return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

Cache::Cache(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw IoError("cache: cannot create root " + root_.string());
}

fs::path Cache::entry_dir(const CacheKey& key) const {
  if (!is_safe_path_component(key.video_id)) {
    throw InvalidInput("cache: unsafe video id '" + key.video_id + "'");
  }
  if (!is_safe_path_component(key.config_hash)) {
    throw InvalidInput("cache: unsafe config hash '" + key.config_hash + "'");
  }
  return root_ / std::string(to_string(key.kind)) / key.video_id;
}

fs::path Cache::payload_path(const CacheKey& key) const {
  return entry_dir(key) / (key.config_hash + ".bin");
}

void Cache::put(const CacheKey& key, std::span<const std::uint8_t> payload) {
  const fs::path dir = entry_dir(key);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cache: cannot create " + dir.string());

  const fs::path bin = dir / (key.config_hash + ".bin");
  const fs::path sum = dir / (key.config_hash + ".sha256");
  const std::string digest = sha256_hex(payload);

  FileLock lock(dir / (key.config_hash + ".lock"), true);
  // Payload first, then the digest that makes it visible to readers.
  atomic_replace(bin, payload);
  atomic_replace(sum, std::span<const std::uint8_t>(
                          reinterpret_cast<const std::uint8_t*>(digest.data()),
                          digest.size()));
  puts_.fetch_add(1);
}

void Cache::put_text(const CacheKey& key, std::string_view text) {
  put(key, std::span<const std::uint8_t>(
               reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::optional<std::vector<std::uint8_t>> Cache::get(const CacheKey& key) const {
  const fs::path dir = entry_dir(key);
  const fs::path bin = dir / (key.config_hash + ".bin");
  const fs::path sum = dir / (key.config_hash + ".sha256");
  if (!fs::exists(sum)) {
    misses_.fetch_add(1);
    return std::nullopt;
  }

  std::optional<std::vector<std::uint8_t>> payload;
  std::optional<std::vector<std::uint8_t>> digest;
  {
    FileLock lock(dir / (key.config_hash + ".lock"), false);
    payload = read_all(bin);
    digest = read_all(sum);
  }
  if (!payload || !digest) {
    misses_.fetch_add(1);
    return std::nullopt;
  }
  const std::string expected(digest->begin(), digest->end());
  if (sha256_hex(*payload) != expected) {
    spdlog::warn("cache: checksum mismatch for {}/{}/{}; treating as absent",
                 to_string(key.kind), key.video_id, key.config_hash);
    corrupt_.fetch_add(1);
    misses_.fetch_add(1);
    return std::nullopt;
  }
  hits_.fetch_add(1);
  return payload;
}

std::optional<std::string> Cache::get_text(const CacheKey& key) const {
  auto bytes = get(key);
  if (!bytes) return std::nullopt;
  return std::string(bytes->begin(), bytes->end());
}

CacheStats Cache::stats() const {
  return {puts_.load(), hits_.load(), misses_.load(), corrupt_.load()};
}

}  // namespace dyneval
