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

#include "dyneval/payload.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "dyneval/error.hpp"

namespace dyneval::payload {

static_assert(std::endian::native == std::endian::little,
              "payload codecs assume a little-endian host");

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

void put_f32(Bytes& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

float get_f32(std::span<const std::uint8_t> b, std::size_t at) {
  const std::uint32_t bits = get_u32(b, at);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

std::uint32_t checked_u32(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInput("payload: dimension exceeds 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

void put_header(Bytes& out, const char* magic, std::size_t h, std::size_t w,
                std::size_t f) {
  out.insert(out.end(), magic, magic + 4);
  put_u32(out, checked_u32(h));
  put_u32(out, checked_u32(w));
  put_u32(out, checked_u32(f));
}

BlockHeader expect_header(std::span<const std::uint8_t> bytes, std::size_t offset,
                          const char* magic) {
  BlockHeader h = read_header(bytes, offset);
  if (std::memcmp(h.magic, magic, 4) != 0) {
    throw InvalidInput(std::string("payload: expected magic '") + magic + "', got '" +
                       std::string(h.magic, 4) + "'");
  }
  return h;
}

void need(std::span<const std::uint8_t> bytes, std::size_t offset, std::size_t size) {
  if (offset + size > bytes.size()) throw InvalidInput("payload: truncated block body");
}

void append_masks(Bytes& out, const MaskSequence& masks) {
  const std::size_t h = masks.empty() ? 0 : masks.front().height();
  const std::size_t w = masks.empty() ? 0 : masks.front().width();
  put_header(out, "MSK1", h, w, masks.size());
  std::uint8_t acc = 0;
  int nbits = 0;
  for (const Mask& m : masks) {
    if (static_cast<std::size_t>(m.height()) != h ||
        static_cast<std::size_t>(m.width()) != w) {
      throw InvalidInput("payload: masks of one sequence differ in extent");
    }
    for (auto v : m.pixels()) {
      acc = static_cast<std::uint8_t>((acc << 1) | (v ? 1 : 0));
      if (++nbits == 8) {
        out.push_back(acc);
        acc = 0;
        nbits = 0;
      }
    }
  }
  if (nbits > 0) out.push_back(static_cast<std::uint8_t>(acc << (8 - nbits)));
}

MaskSequence read_masks(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  const BlockHeader hdr = expect_header(bytes, offset, "MSK1");
  offset += kHeaderSize;
  const std::size_t bits =
      static_cast<std::size_t>(hdr.height) * hdr.width * hdr.frames;
  const std::size_t nbytes = (bits + 7) / 8;
  need(bytes, offset, nbytes);
  MaskSequence masks;
  masks.reserve(hdr.frames);
  std::size_t bit = 0;
  for (std::uint32_t f = 0; f < hdr.frames; ++f) {
    Mask m = make_mask(static_cast<int>(hdr.width), static_cast<int>(hdr.height));
    for (auto& v : m.pixels()) {
      const std::uint8_t byte = bytes[offset + bit / 8];
      v = (byte >> (7 - bit % 8)) & 1;
      ++bit;
    }
    masks.push_back(std::move(m));
  }
  offset += nbytes;
  return masks;
}

void append_tracks(Bytes& out, const TrackSet& tracks) {
  validate_track_set(tracks);
  put_header(out, "TRK1", tracks.tracks.size(), 3, tracks.frames());
  for (const Track& t : tracks.tracks) {
    for (int f = 0; f < t.frames(); ++f) {
      put_f32(out, static_cast<float>(t.positions[f].x));
      put_f32(out, static_cast<float>(t.positions[f].y));
      put_f32(out, t.visible[f] ? 1.0f : 0.0f);
    }
  }
}

TrackSet read_tracks(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  const BlockHeader hdr = expect_header(bytes, offset, "TRK1");
  if (hdr.width != 3) throw InvalidInput("payload: TRK1 block must have W = 3");
  offset += kHeaderSize;
  need(bytes, offset, static_cast<std::size_t>(hdr.height) * hdr.frames * 12);
  TrackSet set;
  set.tracks.resize(hdr.height);
  for (auto& t : set.tracks) {
    t.positions.resize(hdr.frames);
    t.visible.resize(hdr.frames);
    for (std::uint32_t f = 0; f < hdr.frames; ++f) {
      t.positions[f].x = get_f32(bytes, offset);
      t.positions[f].y = get_f32(bytes, offset + 4);
      t.visible[f] = get_f32(bytes, offset + 8) != 0.0f ? 1 : 0;
      offset += 12;
    }
  }
  return set;
}

void expect_consumed(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset != bytes.size()) throw InvalidInput("payload: trailing bytes after block");
}

}  // namespace

BlockHeader read_header(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + kHeaderSize > bytes.size()) {
    throw InvalidInput("payload: truncated block header");
  }
  BlockHeader h{};
  std::memcpy(h.magic, bytes.data() + offset, 4);
  h.height = get_u32(bytes, offset + 4);
  h.width = get_u32(bytes, offset + 8);
  h.frames = get_u32(bytes, offset + 12);
  return h;
}

Bytes encode_masks(const MaskSequence& masks) {
  Bytes out;
  append_masks(out, masks);
  return out;
}

Bytes encode_mask_groups(const std::vector<MaskSequence>& groups) {
  Bytes out;
  for (const auto& g : groups) append_masks(out, g);
  return out;
}

MaskSequence decode_masks(std::span<const std::uint8_t> bytes) {
  std::size_t offset = 0;
  MaskSequence masks = read_masks(bytes, offset);
  expect_consumed(bytes, offset);
  return masks;
}

std::vector<MaskSequence> decode_mask_groups(std::span<const std::uint8_t> bytes) {
  std::vector<MaskSequence> groups;
  std::size_t offset = 0;
  while (offset < bytes.size()) groups.push_back(read_masks(bytes, offset));
  return groups;
}

Bytes encode_error_stack(const ErrorMapStack& stack) {
  Bytes out;
  const std::size_t h = stack.empty() ? 0 : stack.maps.front().values.height();
  const std::size_t w = stack.empty() ? 0 : stack.maps.front().values.width();
  put_header(out, "ERR1", h, w, stack.maps.size());
  out.reserve(kHeaderSize + h * w * stack.maps.size() * 4);
  for (const auto& m : stack.maps) {
    if (static_cast<std::size_t>(m.values.height()) != h ||
        static_cast<std::size_t>(m.values.width()) != w) {
      throw InvalidInput("payload: error maps of one stack differ in extent");
    }
    for (float v : m.values.pixels()) put_f32(out, v);
  }
  return out;
}

ErrorMapStack decode_error_stack(std::span<const std::uint8_t> bytes) {
  const BlockHeader hdr = expect_header(bytes, 0, "ERR1");
  std::size_t offset = kHeaderSize;
  const std::size_t per = static_cast<std::size_t>(hdr.height) * hdr.width;
  need(bytes, offset, per * hdr.frames * 4);
  ErrorMapStack stack;
  for (std::uint32_t f = 0; f < hdr.frames; ++f) {
    ErrorMap m;
    m.frame_index = static_cast<int>(2 * f + 1);
    m.values = Plane(static_cast<int>(hdr.width), static_cast<int>(hdr.height));
    for (auto& v : m.values.pixels()) {
      v = get_f32(bytes, offset);
      offset += 4;
    }
    stack.maps.push_back(std::move(m));
  }
  expect_consumed(bytes, offset);
  return stack;
}

Bytes encode_tracks(const TrackSet& tracks) {
  Bytes out;
  append_tracks(out, tracks);
  return out;
}

Bytes encode_track_groups(const std::vector<TrackSet>& groups) {
  Bytes out;
  for (const auto& g : groups) append_tracks(out, g);
  return out;
}

TrackSet decode_tracks(std::span<const std::uint8_t> bytes) {
  std::size_t offset = 0;
  TrackSet set = read_tracks(bytes, offset);
  expect_consumed(bytes, offset);
  return set;
}

std::vector<TrackSet> decode_track_groups(std::span<const std::uint8_t> bytes) {
  std::vector<TrackSet> groups;
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    TrackSet set = read_tracks(bytes, offset);
    set.object_index = static_cast<int>(groups.size());
    groups.push_back(std::move(set));
  }
  return groups;
}

Bytes encode_embeddings(const std::vector<std::vector<float>>& embeddings) {
  Bytes out;
  const std::size_t d = embeddings.empty() ? 0 : embeddings.front().size();
  put_header(out, "EMB1", embeddings.size(), d, 1);
  for (const auto& e : embeddings) {
    if (e.size() != d) throw InvalidInput("payload: embeddings differ in dimension");
    for (float v : e) put_f32(out, v);
  }
  return out;
}

std::vector<std::vector<float>> decode_embeddings(std::span<const std::uint8_t> bytes) {
  const BlockHeader hdr = expect_header(bytes, 0, "EMB1");
  std::size_t offset = kHeaderSize;
  need(bytes, offset, static_cast<std::size_t>(hdr.height) * hdr.width * 4);
  std::vector<std::vector<float>> out(hdr.height, std::vector<float>(hdr.width));
  for (auto& e : out) {
    for (auto& v : e) {
      v = get_f32(bytes, offset);
      offset += 4;
    }
  }
  expect_consumed(bytes, offset);
  return out;
}

Bytes encode_frames(const FrameSequence& frames) {
  Bytes out;
  const std::size_t h = frames.height();
  const std::size_t w = frames.width();
  put_header(out, "FRM1", h, w, frames.frames.size());
  out.reserve(kHeaderSize + h * w * 3 * frames.frames.size());
  for (const auto& f : frames.frames) {
    if (static_cast<std::size_t>(f.height()) != h ||
        static_cast<std::size_t>(f.width()) != w || f.channels() != 3) {
      throw InvalidInput("payload: frames differ in extent or are not RGB");
    }
    out.insert(out.end(), f.pixels().begin(), f.pixels().end());
  }
  return out;
}

Bytes encode_frame(const RgbFrame& frame) {
  FrameSequence one;
  one.frames.push_back(frame);
  return encode_frames(one);
}

FrameSequence decode_frames(std::span<const std::uint8_t> bytes) {
  const BlockHeader hdr = expect_header(bytes, 0, "FRM1");
  std::size_t offset = kHeaderSize;
  const std::size_t per = static_cast<std::size_t>(hdr.height) * hdr.width * 3;
  need(bytes, offset, per * hdr.frames);
  FrameSequence seq;
  for (std::uint32_t f = 0; f < hdr.frames; ++f) {
    RgbFrame frame = make_frame(static_cast<int>(hdr.width), static_cast<int>(hdr.height));
    std::memcpy(frame.data(), bytes.data() + offset, per);
    offset += per;
    seq.frames.push_back(std::move(frame));
  }
  expect_consumed(bytes, offset);
  return seq;
}

RgbFrame decode_frame(std::span<const std::uint8_t> bytes) {
  FrameSequence seq = decode_frames(bytes);
  if (seq.size() != 1) throw InvalidInput("payload: expected exactly one frame");
  return std::move(seq.frames.front());
}

}  // namespace dyneval::payload
