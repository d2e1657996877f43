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

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>

#include "dyneval/error.hpp"

namespace dyneval::backends {

// Gate for backend invocations: at most `max_in_flight` calls run at once and
// calls for the same video never overlap.
class BackendPool {
 public:
  explicit BackendPool(int max_in_flight = 4) : capacity_(max_in_flight) {
    if (max_in_flight < 1) throw InvalidInput("backend pool needs max_in_flight >= 1");
  }

  template <typename F>
  auto run(std::string_view video_id, F&& call) {
    std::shared_ptr<std::mutex> video_lock = lock_for(video_id);
    std::lock_guard per_video(*video_lock);
    Slot slot(*this);
    return std::forward<F>(call)();
  }

  int max_in_flight() const { return capacity_; }
  int peak_in_flight() const {
    std::lock_guard lock(mutex_);
    return peak_;
  }

 private:
  class Slot {
   public:
    explicit Slot(BackendPool& pool) : pool_(pool) {
      std::unique_lock lock(pool_.mutex_);
      pool_.cv_.wait(lock, [&] { return pool_.in_flight_ < pool_.capacity_; });
      ++pool_.in_flight_;
      if (pool_.in_flight_ > pool_.peak_) pool_.peak_ = pool_.in_flight_;
    }
    ~Slot() {
      {
        std::lock_guard lock(pool_.mutex_);
        --pool_.in_flight_;
      }
      pool_.cv_.notify_one();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    BackendPool& pool_;
  };

  std::shared_ptr<std::mutex> lock_for(std::string_view video_id) {
    std::lock_guard lock(mutex_);
    auto& slot = video_locks_[std::string(video_id)];
    if (!slot) slot = std::make_shared<std::mutex>();
    return slot;
  }

  int capacity_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  int peak_ = 0;
  std::map<std::string, std::shared_ptr<std::mutex>> video_locks_;
};

}  // namespace dyneval::backends
