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

// Binary payload formats shared by the cache and the backend adapter contract.
//
// Every payload is a sequence of blocks. A block starts with a 16-byte header:
//
//   bytes 0..3   magic (ASCII)
//   bytes 4..7   H   (uint32, little endian)
//   bytes 8..11  W   (uint32, little endian)
//   bytes 12..15 F   (uint32, little endian)
//
// followed by the block body:
//
//   "MSK1"  F masks of H x W, bit-packed row-major over (f, y, x), MSB first,
//           zero padded to a whole byte.
//   "ERR1"  F planes of H x W float32 (little endian).
//   "TRK1"  H points, W = 3, F frames; float32 triples (x, y, visible) ordered
//           by point then frame.
//   "EMB1"  H embeddings of dimension W (F = 1), float32.
//   "FRM1"  F RGB frames of H x W, uint8 interleaved.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dyneval/types.hpp"

namespace dyneval::payload {

using Bytes = std::vector<std::uint8_t>;

struct BlockHeader {
  char magic[4];
  std::uint32_t height;
  std::uint32_t width;
  std::uint32_t frames;
};

constexpr std::size_t kHeaderSize = 16;

Bytes encode_masks(const MaskSequence& masks);
Bytes encode_mask_groups(const std::vector<MaskSequence>& groups);
Bytes encode_error_stack(const ErrorMapStack& stack);
Bytes encode_tracks(const TrackSet& tracks);
Bytes encode_track_groups(const std::vector<TrackSet>& groups);
Bytes encode_embeddings(const std::vector<std::vector<float>>& embeddings);
Bytes encode_frames(const FrameSequence& frames);
Bytes encode_frame(const RgbFrame& frame);

// Decoders throw InvalidInput on bad magic, truncated bodies or trailing bytes.
MaskSequence decode_masks(std::span<const std::uint8_t> bytes);
std::vector<MaskSequence> decode_mask_groups(std::span<const std::uint8_t> bytes);
// Frame indices are not part of the format; maps are assigned the odd indices
// 1, 3, 5, ... in order.
ErrorMapStack decode_error_stack(std::span<const std::uint8_t> bytes);
TrackSet decode_tracks(std::span<const std::uint8_t> bytes);
std::vector<TrackSet> decode_track_groups(std::span<const std::uint8_t> bytes);
std::vector<std::vector<float>> decode_embeddings(
    std::span<const std::uint8_t> bytes);
FrameSequence decode_frames(std::span<const std::uint8_t> bytes);
RgbFrame decode_frame(std::span<const std::uint8_t> bytes);

// Reads the header at `offset`; throws if fewer than 16 bytes remain.
BlockHeader read_header(std::span<const std::uint8_t> bytes, std::size_t offset);

}  // namespace dyneval::payload
