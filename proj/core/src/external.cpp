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

#include "dyneval/external.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <httplib.h>

#include "dyneval/error.hpp"
#include "dyneval/hashing.hpp"
#include "dyneval/payload.hpp"

extern char** environ;

namespace dyneval::backends {

namespace fs = std::filesystem;

namespace {

Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw BackendError("adapter produced no output file " + p.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& p, const Bytes& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw BackendError("cannot write adapter input " + p.string());
}

std::string unique_suffix() {
  static std::atomic<std::uint64_t> counter{0};
  std::random_device rd;
  return fmt::format("{}-{}-{:x}", ::getpid(), counter++, rd());
}

nlohmann::json parse_json_output(const Bytes& b, std::string_view op) {
  try {
    return nlohmann::json::parse(b.begin(), b.end());
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(fmt::format("adapter returned malformed JSON for {}: {}", op, e.what()));
  }
}

}  // namespace

// --- process transport ------------------------------------------------------

ProcessAdapter::ProcessAdapter(fs::path executable, fs::path scratch_root)
    : executable_(std::move(executable)),
      scratch_root_(scratch_root.empty() ? fs::temp_directory_path() : std::move(scratch_root)) {}

Bytes ProcessAdapter::call(const std::string& op, std::string_view video_id,
                           const nlohmann::json& params,
                           const std::map<std::string, Bytes>& inputs) {
  const fs::path dir = scratch_root_ / ("dyneval-adapter-" + unique_suffix());
  fs::create_directories(dir);
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{dir};

  nlohmann::json control = {{"op", op},
                            {"video_id", std::string(video_id)},
                            {"params", params.is_null() ? nlohmann::json::object() : params},
                            {"inputs", nlohmann::json::object()},
                            {"output", (dir / "output.bin").string()}};
  for (const auto& [name, bytes] : inputs) {
    const fs::path p = dir / (name + ".bin");
    write_file(p, bytes);
    control["inputs"][name] = p.string();
  }
  const fs::path control_path = dir / "control.json";
  {
    std::ofstream out(control_path);
    out << control.dump();
  }

  const std::string exe = executable_.string();
  const std::string arg = control_path.string();
  char* argv[] = {const_cast<char*>(exe.c_str()), const_cast<char*>(arg.c_str()), nullptr};
  pid_t pid;
  if (int rc = posix_spawn(&pid, exe.c_str(), nullptr, nullptr, argv, environ); rc != 0) {
    throw BackendError(fmt::format("cannot start adapter {}: {}", exe, std::strerror(rc)));
  }
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw BackendError("waitpid failed for adapter " + exe);
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw BackendError(fmt::format("adapter {} failed on op {} for '{}' (status {})", exe, op,
                                   video_id, status));
  }
  return read_file(dir / "output.bin");
}

// --- http transport ---------------------------------------------------------

struct HttpAdapter::Impl {
  std::string scheme_host_port;
  std::string base_path;
  std::chrono::seconds timeout;
};

HttpAdapter::HttpAdapter(const std::string& url, std::chrono::seconds timeout)
    : impl_(std::make_unique<Impl>()) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.compare(0, scheme_end, "http") != 0) {
    throw InvalidInput("adapter url must start with http://: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  impl_->scheme_host_port = url.substr(0, path_start);
  impl_->base_path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!impl_->base_path.empty() && impl_->base_path.back() == '/') impl_->base_path.pop_back();
  impl_->timeout = timeout;
}

HttpAdapter::~HttpAdapter() = default;

Bytes HttpAdapter::call(const std::string& op, std::string_view video_id,
                        const nlohmann::json& params,
                        const std::map<std::string, Bytes>& inputs) {
  nlohmann::json body = {{"op", op},
                         {"video_id", std::string(video_id)},
                         {"params", params.is_null() ? nlohmann::json::object() : params},
                         {"inputs", nlohmann::json::object()}};
  for (const auto& [name, bytes] : inputs) body["inputs"][name] = base64_encode(bytes);

  httplib::Client client(impl_->scheme_host_port);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(impl_->timeout);
  client.set_write_timeout(impl_->timeout);
  auto res = client.Post(impl_->base_path + "/" + op, body.dump(), "application/json");
  if (!res) {
    throw BackendError(fmt::format("adapter {} unreachable for op {}: {}",
                                   impl_->scheme_host_port, op, httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw BackendError(fmt::format("adapter {} answered {} for op {} on '{}': {}",
                                   impl_->scheme_host_port, res->status, op, video_id,
                                   res->body.substr(0, 200)));
  }
  return Bytes(res->body.begin(), res->body.end());
}

std::shared_ptr<AdapterClient> make_adapter(const std::string& address) {
  if (address.rfind("process:", 0) == 0) {
    return std::make_shared<ProcessAdapter>(address.substr(8));
  }
  if (address.rfind("http://", 0) == 0) return std::make_shared<HttpAdapter>(address);
  throw InvalidInput("adapter address must be process:<path> or http://...: " + address);
}

// --- JSON payloads ----------------------------------------------------------

nlohmann::json grounding_to_json(const std::vector<GroundedPhrase>& g) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : g) {
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& b : p.boxes) boxes.push_back({b.x0, b.y0, b.x1, b.y1, b.confidence});
    j.push_back({{"phrase", p.phrase}, {"boxes", boxes}});
  }
  return j;
}

std::vector<GroundedPhrase> grounding_from_json(const nlohmann::json& j) {
  std::vector<GroundedPhrase> out;
  try {
    for (const auto& p : j) {
      GroundedPhrase g{p.at("phrase").get<std::string>(), {}};
      for (const auto& b : p.at("boxes")) {
        g.boxes.push_back({b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                           b.at(3).get<double>(), b.at(4).get<double>()});
      }
      out.push_back(std::move(g));
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed grounding output: ") + e.what());
  }
  return out;
}

nlohmann::json phrases_to_json(const std::vector<TaggedPhrase>& phrases) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : phrases) j.push_back({{"phrase", p.phrase}, {"tag", to_string(p.tag)}});
  return j;
}

std::vector<TaggedPhrase> phrases_from_json(const nlohmann::json& j) {
  std::vector<TaggedPhrase> out;
  try {
    for (const auto& e : j) {
      out.push_back({e.at("phrase").get<std::string>(),
                     motion_tag_from_string(e.at("tag").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed phrase output: ") + e.what());
  } catch (const InvalidInput& e) {
    throw BackendError(std::string("malformed phrase output: ") + e.what());
  }
  return out;
}

// --- backends ---------------------------------------------------------------

namespace {

class ExternalBase {
 public:
  ExternalBase(std::shared_ptr<AdapterClient> client, std::string id, nlohmann::json params)
      : client_(std::move(client)), id_(std::move(id)),
        params_(params.is_null() ? nlohmann::json::object() : std::move(params)) {
    if (!client_) throw InvalidInput("external backend needs an adapter");
    if (id_.empty()) throw InvalidInput("external backend needs an id");
  }

 protected:
  Bytes call(const std::string& op, std::string_view video, nlohmann::json extra,
             const std::map<std::string, Bytes>& inputs) const {
    nlohmann::json p = params_;
    if (extra.is_object()) p.update(extra);
    return client_->call(op, video, p, inputs);
  }

  std::shared_ptr<AdapterClient> client_;
  std::string id_;
  nlohmann::json params_;
};

class ExternalInterpolator : public Interpolator, ExternalBase {
 public:
  using ExternalBase::ExternalBase;
  std::string id() const override { return id_; }
  RgbFrame interpolate(const InterpolationRequest& r) override {
    auto out = call("interpolate", r.video_id,
                    {{"level", r.level}, {"frame_index", r.frame_index}},
                    {{"previous", payload::encode_frame(r.previous)},
                     {"next", payload::encode_frame(r.next)}});
    try {
      return payload::decode_frame(out);
    } catch (const InvalidInput& e) {
      throw BackendError(std::string("interpolation adapter output: ") + e.what());
    }
  }
};

class ExternalEmbedder : public Embedder, ExternalBase {
 public:
  using ExternalBase::ExternalBase;
  std::string id() const override { return id_; }
  std::vector<Embedding> embed(std::string_view video, const FrameSequence& frames) override {
    auto out = call("embed", video, {}, {{"frames", payload::encode_frames(frames)}});
    try {
      return payload::decode_embeddings(out);
    } catch (const InvalidInput& e) {
      throw BackendError(std::string("embedding adapter output: ") + e.what());
    }
  }
};

class ExternalGrounder : public Grounder, ExternalBase {
 public:
  using ExternalBase::ExternalBase;
  std::string id() const override { return id_; }
  std::vector<GroundedPhrase> ground(std::string_view video, const RgbFrame& reference,
                                     std::span<const std::string> phrases) override {
    auto out = call("ground", video,
                    {{"phrases", std::vector<std::string>(phrases.begin(), phrases.end())}},
                    {{"reference", payload::encode_frame(reference)}});
    return grounding_from_json(parse_json_output(out, "ground"));
  }
};

class ExternalPropagator : public MaskPropagator, ExternalBase {
 public:
  using ExternalBase::ExternalBase;
  std::string id() const override { return id_; }
  std::vector<MaskSequence> propagate(std::string_view video, const FrameSequence& frames,
                                      int start, std::span<const Mask> initial) override {
    auto out = call("propagate", video, {{"start_frame", start}},
                    {{"frames", payload::encode_frames(frames)},
                     {"initial", payload::encode_masks(MaskSequence(initial.begin(), initial.end()))}});
    try {
      return payload::decode_mask_groups(out);
    } catch (const InvalidInput& e) {
      throw BackendError(std::string("propagation adapter output: ") + e.what());
    }
  }
};

class ExternalSegmenter : public AutoSegmenter, ExternalBase {
 public:
  using ExternalBase::ExternalBase;
  std::string id() const override { return id_; }
  std::vector<Mask> segment(std::string_view video, const RgbFrame& frame) override {
    auto out = call("auto_masks", video, {}, {{"frame", payload::encode_frame(frame)}});
    std::vector<Mask> masks;
    try {
      for (auto& g : payload::decode_mask_groups(out)) {
        if (g.size() != 1) throw BackendError("auto_masks blocks must hold one mask each");
        masks.push_back(std::move(g.front()));
      }
    } catch (const InvalidInput& e) {
      throw BackendError(std::string("segmentation adapter output: ") + e.what());
    }
    return masks;
  }
};

class ExternalTracker : public PointTracker, ExternalBase {
 public:
  using ExternalBase::ExternalBase;
  std::string id() const override { return id_; }
  TrackSet track(std::string_view video, const FrameSequence& frames, int start,
                 std::span<const Point2> queries) override {
    TrackSet q;
    for (const auto& p : queries) q.tracks.push_back({{p}, {1}});
    auto out = call("track", video, {{"start_frame", start}},
                    {{"frames", payload::encode_frames(frames)},
                     {"queries", payload::encode_tracks(q)}});
    try {
      return payload::decode_tracks(out);
    } catch (const InvalidInput& e) {
      throw BackendError(std::string("tracking adapter output: ") + e.what());
    }
  }
};

class ExternalExtractor : public PhraseExtractor, ExternalBase {
 public:
  using ExternalBase::ExternalBase;
  std::string id() const override { return id_; }
  std::vector<TaggedPhrase> extract(std::string_view prompt) override {
    auto out = call("extract_phrases", "", {{"prompt", std::string(prompt)}}, {});
    return phrases_from_json(parse_json_output(out, "extract_phrases"));
  }
};

}  // namespace

std::shared_ptr<Interpolator> external_interpolator(std::shared_ptr<AdapterClient> c,
                                                    std::string id, nlohmann::json p) {
  return std::make_shared<ExternalInterpolator>(std::move(c), std::move(id), std::move(p));
}
std::shared_ptr<Embedder> external_embedder(std::shared_ptr<AdapterClient> c, std::string id,
                                            nlohmann::json p) {
  return std::make_shared<ExternalEmbedder>(std::move(c), std::move(id), std::move(p));
}
std::shared_ptr<Grounder> external_grounder(std::shared_ptr<AdapterClient> c, std::string id,
                                            nlohmann::json p) {
  return std::make_shared<ExternalGrounder>(std::move(c), std::move(id), std::move(p));
}
std::shared_ptr<MaskPropagator> external_propagator(std::shared_ptr<AdapterClient> c,
                                                    std::string id, nlohmann::json p) {
  return std::make_shared<ExternalPropagator>(std::move(c), std::move(id), std::move(p));
}
std::shared_ptr<AutoSegmenter> external_segmenter(std::shared_ptr<AdapterClient> c,
                                                  std::string id, nlohmann::json p) {
  return std::make_shared<ExternalSegmenter>(std::move(c), std::move(id), std::move(p));
}
std::shared_ptr<PointTracker> external_tracker(std::shared_ptr<AdapterClient> c, std::string id,
                                               nlohmann::json p) {
  return std::make_shared<ExternalTracker>(std::move(c), std::move(id), std::move(p));
}
std::shared_ptr<PhraseExtractor> external_extractor(std::shared_ptr<AdapterClient> c,
                                                    std::string id, nlohmann::json p) {
  return std::make_shared<ExternalExtractor>(std::move(c), std::move(id), std::move(p));
}

}  // namespace dyneval::backends
