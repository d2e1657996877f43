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

// Minimal external adapter for tests: `fake_adapter <control.json>`.
//
//   interpolate      mean of previous and next
//   embed            local thumbnail embedding
//   track            every query stays where it is, visible
//   extract_phrases  [("dog", dynamic), ("factory", static)]
//
// params.fail = true makes any op exit with status 3.

#include <fstream>
#include <iostream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "dyneval/external.hpp"
#include "dyneval/local_backends.hpp"
#include "dyneval/payload.hpp"

using namespace dyneval;
using nlohmann::json;

namespace {

payload::Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const payload::Bytes& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: fake_adapter <control.json>\n";
    return 2;
  }
  std::ifstream in(argv[1]);
  const json control = json::parse(in);
  const std::string op = control.at("op");
  const json& params = control.at("params");
  const json& inputs = control.at("inputs");
  if (params.value("fail", false)) return 3;

  payload::Bytes out;
  if (op == "interpolate") {
    const RgbFrame a = payload::decode_frame(read_file(inputs.at("previous")));
    const RgbFrame b = payload::decode_frame(read_file(inputs.at("next")));
    RgbFrame m = a;
    for (std::size_t i = 0; i < m.size(); ++i) {
      m.data()[i] = static_cast<std::uint8_t>((a.data()[i] + b.data()[i] + 1) / 2);
    }
    out = payload::encode_frame(m);
  } else if (op == "embed") {
    const FrameSequence frames = payload::decode_frames(read_file(inputs.at("frames")));
    backends::ThumbnailEmbedder e(4);
    out = payload::encode_embeddings(e.embed(control.at("video_id").get<std::string>(), frames));
  } else if (op == "track") {
    const FrameSequence frames = payload::decode_frames(read_file(inputs.at("frames")));
    const TrackSet q = payload::decode_tracks(read_file(inputs.at("queries")));
    TrackSet t;
    for (const auto& track : q.tracks) {
      Track tr;
      tr.positions.assign(static_cast<std::size_t>(frames.size()), track.positions.front());
      tr.visible.assign(static_cast<std::size_t>(frames.size()), 1);
      t.tracks.push_back(std::move(tr));
    }
    out = payload::encode_tracks(t);
  } else if (op == "extract_phrases") {
    const std::string text = backends::phrases_to_json(
        {{"dog", backends::MotionTag::dynamic_object}, {"factory", backends::MotionTag::static_object}})
                                 .dump();
    out.assign(text.begin(), text.end());
  } else {
    std::cerr << "unsupported op " << op << "\n";
    return 4;
  }
  write_file(control.at("output"), out);
  return 0;
}
