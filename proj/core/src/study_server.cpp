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

#include "dyneval/study_server.hpp"

#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "dyneval/error.hpp"

namespace dyneval::study {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ApiResult error(int status, const std::string& message) {
  return {status, {{"error", message}}};
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("malformed JSON body: ") + e.what());
  }
}

template <typename F>
ApiResult guarded(F&& f) {
  try {
    return f();
  } catch (const InvalidInput& e) {
    return error(400, e.what());
  } catch (const std::exception& e) {
    spdlog::error("study request failed: {}", e.what());
    return error(500, "internal error");
  }
}

bool safe_id(const std::string& id) {
  if (id.empty() || id.size() > 200) return false;
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) {
      return false;
    }
  }
  return id != "." && id != "..";
}

}  // namespace

json apply_pool(StudyStore& store, const json& j) {
  if (!j.is_object()) throw InvalidInput("pool must be a JSON object");
  json loaded = json::object();
  try {
    if (j.contains("payload")) {
      std::vector<StudyPair> pairs;
      for (const auto& p : j.at("payload")) pairs.push_back(study_pair_from_json(p));
      store.add_payload_pairs(pairs);
      loaded["payload"] = pairs.size();
    }
    if (j.contains("gold")) {
      std::vector<GoldPair> gold;
      for (const auto& g : j.at("gold")) gold.push_back(gold_pair_from_json(g));
      store.set_gold_pairs(gold);
      loaded["gold"] = gold.size();
    }
    if (j.contains("sanity")) {
      std::vector<SanityItem> sanity;
      for (const auto& s : j.at("sanity")) sanity.push_back(sanity_item_from_json(s));
      store.set_sanity_items(sanity);
      loaded["sanity"] = sanity.size();
    }
    if (j.contains("qualification")) {
      store.set_qualification_test(qualification_test_from_json(j.at("qualification")));
      loaded["qualification"] = true;
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("pool: ") + e.what());
  }
  return loaded;
}

StudyService::StudyService(StudyStore& store, ServerOptions options)
    : store_(store), options_(std::move(options)) {}

bool StudyService::authorized(const std::string& authorization) const {
  if (options_.admin_token.empty()) return false;
  return authorization == "Bearer " + options_.admin_token;
}

ApiResult StudyService::get_config() const {
  json cfg = options_.ui_config;
  cfg["pages_per_hit"] = kHitPages;
  cfg["video_base_url"] = options_.video_base_url;
  cfg["instructions"] = cfg.value(
      "instructions",
      std::string("For each pair, select the video with MORE distortion on the asked "
                  "dimension. If both look equally distorted, watch again and look for "
                  "subtle differences."));
  return {200, cfg};
}

ApiResult StudyService::get_qualification() const {
  return guarded([&]() -> ApiResult {
    const auto t = store_.qualification_test();
    if (!t) return error(404, "no qualification test configured");
    return {200, serve_qualification(*t, options_.video_base_url)};
  });
}

ApiResult StudyService::post_qualification(const std::string& worker_id, const std::string& body) {
  return guarded([&]() -> ApiResult {
    const auto t = store_.qualification_test();
    if (!t) return error(404, "no qualification test configured");
    const Qualification q = grade_qualification(*t, qualification_answers_from_json(parse_body(body)));
    return {200, to_json(store_.record_qualification(worker_id, q))};
  });
}

ApiResult StudyService::get_hit(const std::string& worker_id) {
  return guarded([&]() -> ApiResult {
    if (worker_id.empty()) return error(400, "missing worker");
    const auto w = store_.worker(worker_id);
    if (!w || !w->qualification.passed) return error(403, "worker is not qualified");
    const Hit hit = store_.assign_hit(worker_id);
    return {200, serve_hit(hit, options_.video_base_url)};
  });
}

ApiResult StudyService::post_response(const std::string& hit_id, const std::string& body) {
  return guarded([&]() -> ApiResult {
    if (!store_.find_hit(hit_id)) return error(404, "unknown HIT");
    const HitResponse r = store_.submit_response(hit_id, submission_from_json(parse_body(body)));
    return {200, to_json(r)};
  });
}

ApiResult StudyService::export_annotations(const std::string& authorization) const {
  if (!authorized(authorization)) return error(401, "admin token required");
  return guarded([&]() -> ApiResult {
    const auto a = store_.export_annotations();
    return {200, annotations_to_json(a)};
  });
}

ApiResult StudyService::post_pool(const std::string& authorization, const std::string& body) {
  if (!authorized(authorization)) return error(401, "admin token required");
  return guarded([&]() -> ApiResult {
    return {200, {{"loaded", apply_pool(store_, parse_body(body))}}};
  });
}

ApiResult StudyService::get_stats(const std::string& authorization) const {
  if (!authorized(authorization)) return error(401, "admin token required");
  return guarded([&]() -> ApiResult { return {200, store_.stats()}; });
}

fs::path StudyService::video_path(const std::string& video_id) const {
  if (const auto it = options_.videos.find(video_id); it != options_.videos.end()) {
    return it->second;
  }
  if (options_.video_dir.empty() || !safe_id(video_id)) return {};
  for (const char* ext : {"", ".mp4", ".webm", ".y4m", ".avi"}) {
    const fs::path p = options_.video_dir / (video_id + ext);
    if (fs::is_regular_file(p)) return p;
  }
  return {};
}

struct StudyServer::Impl {
  Impl(StudyStore& store, ServerOptions options) : service(store, std::move(options)) {}

  StudyService service;
  httplib::Server server;
  std::thread thread;
};

namespace {

void reply(httplib::Response& res, const ApiResult& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::string mime_for(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".mp4") return "video/mp4";
  if (ext == ".webm") return "video/webm";
  return "application/octet-stream";
}

}  // namespace

StudyServer::StudyServer(StudyStore& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
  auto& s = impl_->server;
  auto& svc = impl_->service;
  s.Get("/config", [&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, svc.get_config());
  });
  s.Get("/qualification", [&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, svc.get_qualification());
  });
  s.Post(R"(/qualification/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.post_qualification(req.matches[1], req.body));
  });
  s.Get("/hit", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.get_hit(req.get_param_value("worker")));
  });
  s.Post(R"(/hit/([^/]+)/response)", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.post_response(req.matches[1], req.body));
  });
  s.Get("/export/annotations", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.export_annotations(req.get_header_value("Authorization")));
  });
  s.Post("/admin/pool", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.post_pool(req.get_header_value("Authorization"), req.body));
  });
  s.Get("/admin/stats", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.get_stats(req.get_header_value("Authorization")));
  });
  s.Get(R"(/videos/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    const fs::path p = svc.video_path(req.matches[1]);
    if (p.empty()) {
      reply(res, error(404, "unknown video"));
      return;
    }
    auto in = std::make_shared<std::ifstream>(p, std::ios::binary);
    const auto size = static_cast<std::size_t>(fs::file_size(p));
    res.set_content_provider(size, mime_for(p),
                             [in](std::size_t offset, std::size_t length, httplib::DataSink& sink) {
                               std::vector<char> buf(std::min<std::size_t>(length, 1 << 16));
                               in->seekg(static_cast<std::streamoff>(offset));
                               in->read(buf.data(), static_cast<std::streamsize>(buf.size()));
                               sink.write(buf.data(), static_cast<std::size_t>(in->gcount()));
                               return true;
                             });
  });
  if (!svc.options().static_dir.empty()) {
    s.set_mount_point("/", svc.options().static_dir.string());
  }
}

StudyServer::~StudyServer() { stop(); }

int StudyServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw IoError("cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw IoError(fmt::format("cannot bind {}:{}", host, port));
  }
  return port;
}

void StudyServer::listen() { impl_->server.listen_after_bind(); }

void StudyServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void StudyServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

StudyService& StudyServer::service() { return impl_->service; }

}  // namespace dyneval::study
