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

#include "dyneval/pipeline.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dyneval/background.hpp"
#include "dyneval/error.hpp"
#include "dyneval/hashing.hpp"
#include "dyneval/payload.hpp"
#include "dyneval/pyramid.hpp"

namespace dyneval {

using nlohmann::json;

namespace {

template <typename T>
std::string id_or_none(const std::shared_ptr<T>& p) {
  return p ? p->id() : "none";
}

void expect_mask_extent(const std::vector<MaskSequence>& groups, const FrameSequence& frames) {
  for (const auto& g : groups) {
    if (static_cast<int>(g.size()) != frames.size()) {
      throw InvalidInput("cached masks cover a different frame count");
    }
    for (const auto& m : g) {
      if (m.width() != frames.width() || m.height() != frames.height()) {
        throw InvalidInput("cached masks have a different extent");
      }
    }
  }
}

std::string points_digest(std::span<const Point2> queries) {
  std::string s;
  for (const auto& p : queries) s += fmt::format("{:.17g},{:.17g};", p.x, p.y);
  return sha256_hex(s).substr(0, 16);
}

}  // namespace

Pipeline::Pipeline(backends::BackendSet backends, std::shared_ptr<Cache> cache,
                   int max_in_flight)
    : backends_(std::move(backends)), cache_(std::move(cache)), pool_(max_in_flight) {}

template <typename T, typename Compute, typename Encode, typename Decode>
T Pipeline::cached(CacheKind kind, std::string_view video_id, const json& key,
                   Compute&& compute, Encode&& encode, Decode&& decode) {
  const CacheKey ck{kind, std::string(video_id), config_hash(key)};
  if (cache_) {
    if (auto bytes = cache_->get(ck)) {
      try {
        return decode(*bytes);
      } catch (const InvalidInput& e) {
        spdlog::warn("ignoring cached {} for '{}': {}", to_string(kind), video_id, e.what());
      }
    }
  }
  T value = pool_.run(video_id, compute);
  if (cache_) cache_->put(ck, encode(value));
  return value;
}

json Pipeline::error_maps_key(int level) const {
  return {{"stage", "error_maps"},
          {"interpolator", id_or_none(backends_.interpolator)},
          {"level", level},
          {"pyramid", "binomial5"}};
}

json Pipeline::auto_masks_key() const {
  return {{"stage", "auto_masks"},
          {"segmenter", id_or_none(backends_.segmenter)},
          {"propagator", id_or_none(backends_.propagator)}};
}

json Pipeline::edge_maps_key(int level, const EdgeMapConfig& cfg) const {
  return {{"stage", "edge_maps"},
          {"source", auto_masks_key()},
          {"level", level},
          {"gradient_kernel", cfg.gradient_kernel},
          {"dilation_kernel", cfg.dilation_kernel},
          {"dilation_iterations", cfg.dilation_iterations}};
}

json Pipeline::object_masks_key(std::string_view prompt, double threshold) const {
  return {{"stage", "object_masks"},
          {"extractor", id_or_none(backends_.extractor)},
          {"grounder", id_or_none(backends_.grounder)},
          {"propagator", id_or_none(backends_.propagator)},
          {"threshold", threshold},
          {"prompt", sha256_hex(prompt).substr(0, 16)}};
}

ErrorMapStack Pipeline::error_maps(std::string_view video_id, const FrameSequence& level_frames,
                                   int level) {
  const std::size_t expected = (level_frames.size() - 1) / 2;
  return cached<ErrorMapStack>(
      CacheKind::error_maps, video_id, error_maps_key(level),
      [&] {
        return compute_ms_error_maps(level_frames,
                                     require_backend(backends_.interpolator, "interpolator"),
                                     video_id, level);
      },
      [](const ErrorMapStack& s) { return payload::encode_error_stack(s); },
      [&](const auto& bytes) {
        ErrorMapStack s = payload::decode_error_stack(bytes);
        if (s.maps.size() != expected ||
            (!s.empty() && !s.maps.front().values.same_extent(level_frames[0]))) {
          throw InvalidInput("cached error maps do not match the video");
        }
        return s;
      });
}

std::vector<MaskSequence> Pipeline::auto_masks(std::string_view video_id,
                                               const FrameSequence& frames) {
  return cached<std::vector<MaskSequence>>(
      CacheKind::masks, video_id, auto_masks_key(),
      [&] {
        return compute_auto_masks(video_id, frames,
                                  require_backend(backends_.segmenter, "segmenter"),
                                  require_backend(backends_.propagator, "propagator"));
      },
      [](const auto& g) { return payload::encode_mask_groups(g); },
      [&](const auto& bytes) {
        auto g = payload::decode_mask_groups(bytes);
        expect_mask_extent(g, frames);
        return g;
      });
}

std::vector<MaskSequence> Pipeline::edge_maps(std::string_view video_id,
                                              const FrameSequence& frames, int levels,
                                              const EdgeMapConfig& cfg) {
  std::vector<MaskSequence> out(levels);
  std::vector<int> missing;
  for (int l = 0; l < levels; ++l) {
    const int w = level_extent(frames.width(), l);
    const int h = level_extent(frames.height(), l);
    const CacheKey ck{CacheKind::edges, std::string(video_id), config_hash(edge_maps_key(l, cfg))};
    std::optional<std::vector<std::uint8_t>> bytes;
    if (cache_) bytes = cache_->get(ck);
    if (bytes) {
      try {
        MaskSequence m = payload::decode_masks(*bytes);
        if (static_cast<int>(m.size()) == frames.size() && m.front().width() == w &&
            m.front().height() == h) {
          out[l] = std::move(m);
          continue;
        }
        spdlog::warn("ignoring cached edges for '{}': shape mismatch", video_id);
      } catch (const InvalidInput& e) {
        spdlog::warn("ignoring cached edges for '{}': {}", video_id, e.what());
      }
    }
    missing.push_back(l);
  }
  if (missing.empty()) return out;
  // Edges derive from the auto masks without further backend calls.
  const auto source = auto_masks(video_id, frames);
  for (int l : missing) {
    out[l] = level_edge_maps(source, l, frames.size(), level_extent(frames.width(), l),
                             level_extent(frames.height(), l), cfg);
    if (cache_) {
      cache_->put({CacheKind::edges, std::string(video_id), config_hash(edge_maps_key(l, cfg))},
                  payload::encode_masks(out[l]));
    }
  }
  return out;
}

std::vector<MaskSequence> Pipeline::object_masks(std::string_view video_id,
                                                 const FrameSequence& frames,
                                                 std::string_view prompt, double threshold) {
  return cached<std::vector<MaskSequence>>(
      CacheKind::masks, video_id, object_masks_key(prompt, threshold),
      [&]() -> std::vector<MaskSequence> {
        if (!backends_.extractor || prompt.empty()) {
          if (!backends_.extractor) spdlog::warn("no phrase extractor; no foreground objects");
          return {};
        }
        const auto phrases = extract_moving_objects(prompt, *backends_.extractor);
        if (phrases.empty()) return {};
        return compute_object_masks(video_id, frames, phrases,
                                    require_backend(backends_.grounder, "grounder"),
                                    require_backend(backends_.propagator, "propagator"),
                                    threshold)
            .objects;
      },
      [](const auto& g) { return payload::encode_mask_groups(g); },
      [&](const auto& bytes) {
        auto g = payload::decode_mask_groups(bytes);
        expect_mask_extent(g, frames);
        return g;
      });
}

namespace {

std::vector<backends::Embedding> checked_embed(backends::Embedder& e, std::string_view video,
                                               const FrameSequence& frames) {
  auto out = e.embed(video, frames);
  backends::check_embeddings(frames, out);
  return out;
}

}  // namespace

std::vector<backends::Embedding> Pipeline::scene_embeddings(std::string_view video_id,
                                                            const FrameSequence& frames) {
  return cached<std::vector<backends::Embedding>>(
      CacheKind::embeddings, video_id,
      json{{"stage", "embeddings"}, {"role", "scene"},
           {"embedder", id_or_none(backends_.scene_embedder)}},
      [&] {
        return checked_embed(require_backend(backends_.scene_embedder, "scene embedder"),
                             video_id, frames);
      },
      [](const auto& e) { return payload::encode_embeddings(e); },
      [&](const auto& bytes) {
        auto e = payload::decode_embeddings(bytes);
        if (static_cast<int>(e.size()) != frames.size()) {
          throw InvalidInput("cached embeddings cover a different frame count");
        }
        return e;
      });
}

std::vector<backends::Embedding> Pipeline::object_embeddings(std::string_view video_id,
                                                             const FrameSequence& frames) {
  return cached<std::vector<backends::Embedding>>(
      CacheKind::embeddings, video_id,
      json{{"stage", "embeddings"}, {"role", "object"},
           {"embedder", id_or_none(backends_.object_embedder)}},
      [&] {
        return checked_embed(require_backend(backends_.object_embedder, "object embedder"),
                             video_id, frames);
      },
      [](const auto& e) { return payload::encode_embeddings(e); },
      [&](const auto& bytes) {
        auto e = payload::decode_embeddings(bytes);
        if (static_cast<int>(e.size()) != frames.size()) {
          throw InvalidInput("cached embeddings cover a different frame count");
        }
        return e;
      });
}

TrackSet Pipeline::tracks(std::string_view video_id, const FrameSequence& frames,
                          int start_frame, std::span<const Point2> queries,
                          std::string_view label) {
  const json key = {{"stage", "tracks"},
                    {"tracker", id_or_none(backends_.tracker)},
                    {"label", std::string(label)},
                    {"start_frame", start_frame},
                    {"queries", points_digest(queries)}};
  return cached<TrackSet>(
      CacheKind::tracks, video_id, key,
      [&] {
        auto& tracker = require_backend(backends_.tracker, "tracker");
        TrackSet t = tracker.track(video_id, frames, start_frame, queries);
        backends::check_tracks(frames, start_frame, queries, t);
        return t;
      },
      [](const TrackSet& t) { return payload::encode_tracks(t); },
      [&](const auto& bytes) {
        TrackSet t = payload::decode_tracks(bytes);
        if (t.size() != static_cast<int>(queries.size()) ||
            (t.size() > 0 && t.frames() != frames.size())) {
          throw InvalidInput("cached tracks do not match the request");
        }
        return t;
      });
}

std::optional<json> Pipeline::cached_score(std::string_view video_id, const json& key) const {
  if (!cache_) return std::nullopt;
  auto text = cache_->get_text({CacheKind::scores, std::string(video_id), config_hash(key)});
  if (!text) return std::nullopt;
  try {
    return json::parse(*text);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void Pipeline::store_score(std::string_view video_id, const json& key, const json& score) {
  if (!cache_) return;
  cache_->put_text({CacheKind::scores, std::string(video_id), config_hash(key)}, score.dump());
}

}  // namespace dyneval
