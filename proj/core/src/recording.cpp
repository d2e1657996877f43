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

#include "dyneval/recording.hpp"

#include <fmt/format.h>

#include "dyneval/error.hpp"
#include "dyneval/external.hpp"
#include "dyneval/hashing.hpp"
#include "dyneval/payload.hpp"

namespace dyneval::backends {

void Tape::put(const std::string& key, std::vector<std::uint8_t> bytes) {
  std::lock_guard lock(mutex_);
  entries_[key] = std::move(bytes);
}

std::optional<std::vector<std::uint8_t>> Tape::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::size_t Tape::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

nlohmann::json Tape::to_json() const {
  std::lock_guard lock(mutex_);
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : entries_) j[k] = base64_encode(v);
  return j;
}

std::shared_ptr<Tape> Tape::from_json(const nlohmann::json& j) {
  auto t = std::make_shared<Tape>();
  for (const auto& [k, v] : j.items()) t->entries_[k] = base64_decode(v.get<std::string>());
  return t;
}

namespace {

enum class Mode { record, replay, count };

std::string frames_digest(const FrameSequence& frames) {
  return sha256_hex(payload::encode_frames(frames)).substr(0, 16);
}

std::vector<std::uint8_t> as_bytes(const std::string& s) {
  return {s.begin(), s.end()};
}

std::string as_text(const std::vector<std::uint8_t>& b) { return {b.begin(), b.end()}; }

// Shared plumbing: either forward (and maybe record) or serve from the tape.
template <typename Inner>
class Wrapper : public CallCount {
 public:
  Wrapper(Mode mode, std::shared_ptr<Inner> inner, std::shared_ptr<Tape> tape,
          std::string id)
      : mode_(mode), inner_(std::move(inner)), tape_(std::move(tape)), id_(std::move(id)) {}

 protected:
  template <typename T, typename Call, typename Encode, typename Decode>
  T dispatch(const std::string& key, Call&& call, Encode&& encode, Decode&& decode) {
    bump();
    if (mode_ == Mode::replay) {
      auto bytes = tape_ ? tape_->get(key) : std::nullopt;
      if (!bytes) throw NotRecorded("no recorded output for " + key + " (backend " + id_ + ")");
      return decode(*bytes);
    }
    T out = call();
    if (mode_ == Mode::record) tape_->put(key, encode(out));
    return out;
  }

  std::string key(std::string_view op, std::string_view video, std::string detail) const {
    return fmt::format("{}|{}|{}|{}", id_, op, video, detail);
  }

  Mode mode_;
  std::shared_ptr<Inner> inner_;
  std::shared_ptr<Tape> tape_;
  std::string id_;
};

class WrappedInterpolator : public Interpolator, public Wrapper<Interpolator> {
 public:
  using Wrapper::Wrapper;
  std::string id() const override { return id_; }
  RgbFrame interpolate(const InterpolationRequest& r) override {
    const std::string input = sha256_hex(payload::encode_frame(r.previous)).substr(0, 16) +
                              sha256_hex(payload::encode_frame(r.next)).substr(0, 16);
    return dispatch<RgbFrame>(
        key("interpolate", r.video_id, fmt::format("{}/{}/{}", r.level, r.frame_index, input)),
        [&] { return inner_->interpolate(r); },
        [](const RgbFrame& f) { return payload::encode_frame(f); },
        [](const auto& b) { return payload::decode_frame(b); });
  }
};

class WrappedEmbedder : public Embedder, public Wrapper<Embedder> {
 public:
  using Wrapper::Wrapper;
  std::string id() const override { return id_; }
  std::vector<Embedding> embed(std::string_view video, const FrameSequence& frames) override {
    return dispatch<std::vector<Embedding>>(
        key("embed", video, frames_digest(frames)),
        [&] { return inner_->embed(video, frames); },
        [](const auto& e) { return payload::encode_embeddings(e); },
        [](const auto& b) { return payload::decode_embeddings(b); });
  }
};

class WrappedGrounder : public Grounder, public Wrapper<Grounder> {
 public:
  using Wrapper::Wrapper;
  std::string id() const override { return id_; }
  std::vector<GroundedPhrase> ground(std::string_view video, const RgbFrame& reference,
                                     std::span<const std::string> phrases) override {
    nlohmann::json detail = {std::vector<std::string>(phrases.begin(), phrases.end()),
                             sha256_hex(payload::encode_frame(reference)).substr(0, 16)};
    return dispatch<std::vector<GroundedPhrase>>(
        key("ground", video, detail.dump()),
        [&] { return inner_->ground(video, reference, phrases); },
        [](const auto& g) { return as_bytes(grounding_to_json(g).dump()); },
        [](const auto& b) { return grounding_from_json(nlohmann::json::parse(as_text(b))); });
  }
};

class WrappedPropagator : public MaskPropagator, public Wrapper<MaskPropagator> {
 public:
  using Wrapper::Wrapper;
  std::string id() const override { return id_; }
  std::vector<MaskSequence> propagate(std::string_view video, const FrameSequence& frames,
                                      int start, std::span<const Mask> initial) override {
    const std::string regions =
        sha256_hex(payload::encode_masks(MaskSequence(initial.begin(), initial.end())));
    return dispatch<std::vector<MaskSequence>>(
        key("propagate", video,
            fmt::format("{}/{}/{}", start, frames_digest(frames), regions.substr(0, 16))),
        [&] { return inner_->propagate(video, frames, start, initial); },
        [](const auto& g) { return payload::encode_mask_groups(g); },
        [](const auto& b) { return payload::decode_mask_groups(b); });
  }
};

class WrappedSegmenter : public AutoSegmenter, public Wrapper<AutoSegmenter> {
 public:
  using Wrapper::Wrapper;
  std::string id() const override { return id_; }
  std::vector<Mask> segment(std::string_view video, const RgbFrame& frame) override {
    return dispatch<std::vector<Mask>>(
        key("auto_masks", video, sha256_hex(payload::encode_frame(frame)).substr(0, 16)),
        [&] { return inner_->segment(video, frame); },
        [](const std::vector<Mask>& masks) {
          std::vector<MaskSequence> groups;
          for (const auto& m : masks) groups.push_back({m});
          return payload::encode_mask_groups(groups);
        },
        [](const auto& b) {
          std::vector<Mask> masks;
          for (auto& g : payload::decode_mask_groups(b)) masks.push_back(std::move(g.front()));
          return masks;
        });
  }
};

class WrappedTracker : public PointTracker, public Wrapper<PointTracker> {
 public:
  using Wrapper::Wrapper;
  std::string id() const override { return id_; }
  TrackSet track(std::string_view video, const FrameSequence& frames, int start,
                 std::span<const Point2> queries) override {
    std::string q;
    for (const auto& p : queries) q += fmt::format("{:.17g},{:.17g};", p.x, p.y);
    return dispatch<TrackSet>(
        key("track", video,
            fmt::format("{}/{}/{}", start, frames_digest(frames), sha256_hex(q).substr(0, 16))),
        [&] { return inner_->track(video, frames, start, queries); },
        [](const auto& t) { return payload::encode_tracks(t); },
        [](const auto& b) { return payload::decode_tracks(b); });
  }
};

class WrappedExtractor : public PhraseExtractor, public Wrapper<PhraseExtractor> {
 public:
  using Wrapper::Wrapper;
  std::string id() const override { return id_; }
  std::vector<TaggedPhrase> extract(std::string_view prompt) override {
    return dispatch<std::vector<TaggedPhrase>>(
        key("extract_phrases", "-", sha256_hex(prompt).substr(0, 16)),
        [&] { return inner_->extract(prompt); },
        [](const auto& ps) { return as_bytes(phrases_to_json(ps).dump()); },
        [](const auto& b) { return phrases_from_json(nlohmann::json::parse(as_text(b))); });
  }
};

template <typename W, typename I>
std::shared_ptr<I> wrap(Mode mode, const std::shared_ptr<I>& inner,
                        const std::shared_ptr<Tape>& tape) {
  if (!inner) return nullptr;
  return std::make_shared<W>(mode, mode == Mode::replay ? nullptr : inner, tape, inner->id());
}

BackendSet wrap_all(Mode mode, const BackendSet& in, const std::shared_ptr<Tape>& tape) {
  BackendSet out;
  out.interpolator = wrap<WrappedInterpolator>(mode, in.interpolator, tape);
  out.scene_embedder = wrap<WrappedEmbedder>(mode, in.scene_embedder, tape);
  out.object_embedder = wrap<WrappedEmbedder>(mode, in.object_embedder, tape);
  out.grounder = wrap<WrappedGrounder>(mode, in.grounder, tape);
  out.propagator = wrap<WrappedPropagator>(mode, in.propagator, tape);
  out.segmenter = wrap<WrappedSegmenter>(mode, in.segmenter, tape);
  out.tracker = wrap<WrappedTracker>(mode, in.tracker, tape);
  out.extractor = wrap<WrappedExtractor>(mode, in.extractor, tape);
  return out;
}

template <typename I>
std::uint64_t calls_of(const std::shared_ptr<I>& p) {
  const auto* c = dynamic_cast<const CallCount*>(p.get());
  return c ? c->calls() : 0;
}

}  // namespace

BackendSet record_backends(const BackendSet& inner, std::shared_ptr<Tape> tape) {
  if (!tape) throw InvalidInput("record_backends: tape is null");
  return wrap_all(Mode::record, inner, tape);
}

BackendSet replay_backends(const BackendSet& recorded, std::shared_ptr<Tape> tape) {
  if (!tape) throw InvalidInput("replay_backends: tape is null");
  return wrap_all(Mode::replay, recorded, tape);
}

BackendSet count_backends(const BackendSet& inner) {
  return wrap_all(Mode::count, inner, nullptr);
}

std::uint64_t total_calls(const BackendSet& s) {
  // The two embedder slots may hold the same object; count it once.
  std::uint64_t n = calls_of(s.interpolator) + calls_of(s.scene_embedder) +
                    calls_of(s.grounder) + calls_of(s.propagator) + calls_of(s.segmenter) +
                    calls_of(s.tracker) + calls_of(s.extractor);
  if (s.object_embedder != s.scene_embedder) n += calls_of(s.object_embedder);
  return n;
}

BackendSet make_replay_backends(const std::map<std::string, std::string>& ids) {
  auto id_of = [&](const char* role) -> std::optional<std::string> {
    auto it = ids.find(role);
    if (it == ids.end()) return std::nullopt;
    return it->second;
  };
  BackendSet out;
  if (auto id = id_of("interpolator"))
    out.interpolator = std::make_shared<WrappedInterpolator>(Mode::replay, nullptr, nullptr, *id);
  if (auto id = id_of("scene_embedder"))
    out.scene_embedder = std::make_shared<WrappedEmbedder>(Mode::replay, nullptr, nullptr, *id);
  if (auto id = id_of("object_embedder"))
    out.object_embedder = std::make_shared<WrappedEmbedder>(Mode::replay, nullptr, nullptr, *id);
  if (auto id = id_of("grounder"))
    out.grounder = std::make_shared<WrappedGrounder>(Mode::replay, nullptr, nullptr, *id);
  if (auto id = id_of("propagator"))
    out.propagator = std::make_shared<WrappedPropagator>(Mode::replay, nullptr, nullptr, *id);
  if (auto id = id_of("segmenter"))
    out.segmenter = std::make_shared<WrappedSegmenter>(Mode::replay, nullptr, nullptr, *id);
  if (auto id = id_of("tracker"))
    out.tracker = std::make_shared<WrappedTracker>(Mode::replay, nullptr, nullptr, *id);
  if (auto id = id_of("extractor"))
    out.extractor = std::make_shared<WrappedExtractor>(Mode::replay, nullptr, nullptr, *id);
  return out;
}

}  // namespace dyneval::backends
