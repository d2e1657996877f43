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

// HTTP JSON API of the annotation study.
//
//   GET  /config                     UI configuration
//   GET  /qualification              qualification test (no answer keys)
//   POST /qualification/{worker}     grade a qualification submission
//   GET  /hit?worker=W               the worker's open or a new HIT
//   POST /hit/{id}/response          score and store a response
//   GET  /export/annotations         accepted votes (admin)
//   POST /admin/pool                 load payload, gold, sanity, qualification (admin)
//   GET  /admin/stats                store counters (admin)
//   GET  /videos/{video_id}          paired video files
//
// Admin routes need "Authorization: Bearer <token>".

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "dyneval/study_store.hpp"

namespace dyneval::study {

struct ServerOptions {
  std::string admin_token;
  std::filesystem::path video_dir;                       // <dir>/<video_id>.<ext>
  std::map<std::string, std::filesystem::path> videos;   // explicit id -> file
  std::string video_base_url = "/videos/";
  nlohmann::json ui_config = nlohmann::json::object();
  std::filesystem::path static_dir;                      // optional UI bundle
};

// Loads {payload: [...], gold: [...], sanity: [...], qualification: {...}}
// (every key optional) and returns the loaded counts.
nlohmann::json apply_pool(StudyStore& store, const nlohmann::json& pool);

struct ApiResult {
  int status = 200;
  nlohmann::json body;
};

// Transport-independent request handling; the HTTP server is a thin shell.
class StudyService {
 public:
  StudyService(StudyStore& store, ServerOptions options);

  ApiResult get_config() const;
  ApiResult get_qualification() const;
  ApiResult post_qualification(const std::string& worker_id, const std::string& body);
  ApiResult get_hit(const std::string& worker_id);
  ApiResult post_response(const std::string& hit_id, const std::string& body);
  ApiResult export_annotations(const std::string& authorization) const;
  ApiResult post_pool(const std::string& authorization, const std::string& body);
  ApiResult get_stats(const std::string& authorization) const;

  // Resolved file for a video id, or empty.
  std::filesystem::path video_path(const std::string& video_id) const;
  const ServerOptions& options() const { return options_; }

 private:
  bool authorized(const std::string& authorization) const;

  StudyStore& store_;
  ServerOptions options_;
};

class StudyServer {
 public:
  StudyServer(StudyStore& store, ServerOptions options);
  ~StudyServer();

  // Binds to host:port (port 0 picks a free port) and returns the port.
  int bind(const std::string& host, int port);
  // Serves until stop(). Blocking.
  void listen();
  // listen() on a background thread.
  void start();
  void stop();

  StudyService& service();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dyneval::study
