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

// Adapters for perception models running outside this process.
//
// Every call is one JSON control message
//
//   {"op": ..., "video_id": ..., "params": {...}, "inputs": {...}, "output": ...}
//
// plus binary inputs in the payload formats of payload.hpp. Two transports:
//
//   process  `<executable> <control.json>`; "inputs" maps names to files in a
//            scratch directory and "output" names the file the adapter must
//            write. A nonzero exit status is a failure.
//   http     POST <url>/<op> with the control message as the JSON body,
//            inputs inlined as base64 strings and no "output" field. The
//            response body (200) is the output payload.
//
// Ops, inputs and outputs:
//
//   interpolate      previous, next: FRM1 (F=1)       -> FRM1 (F=1)
//                    params {level, frame_index}
//   embed            frames: FRM1                     -> EMB1
//   ground           reference: FRM1 (F=1)            -> JSON [{phrase, boxes:
//                    params {phrases}                      [[x0,y0,x1,y1,conf]]}]
//   propagate        frames: FRM1, initial: MSK1      -> MSK1 blocks, one per object
//                    params {start_frame}
//   auto_masks       frame: FRM1 (F=1)                -> MSK1 blocks of F=1
//   track            frames: FRM1, queries: TRK1 (F=1) -> TRK1
//                    params {start_frame}
//   extract_phrases  params {prompt}                  -> JSON [{phrase, tag}]

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyneval/backends.hpp"

namespace dyneval::backends {

using Bytes = std::vector<std::uint8_t>;

class AdapterClient {
 public:
  virtual ~AdapterClient() = default;
  // Throws BackendError on any transport failure or adapter error.
  virtual Bytes call(const std::string& op, std::string_view video_id,
                     const nlohmann::json& params,
                     const std::map<std::string, Bytes>& inputs) = 0;
};

class ProcessAdapter : public AdapterClient {
 public:
  explicit ProcessAdapter(std::filesystem::path executable,
                          std::filesystem::path scratch_root = {});
  Bytes call(const std::string& op, std::string_view video_id, const nlohmann::json& params,
             const std::map<std::string, Bytes>& inputs) override;

 private:
  std::filesystem::path executable_;
  std::filesystem::path scratch_root_;
};

class HttpAdapter : public AdapterClient {
 public:
  // url: "http://host[:port][/base]".
  explicit HttpAdapter(const std::string& url,
                       std::chrono::seconds timeout = std::chrono::seconds(300));
  ~HttpAdapter() override;
  Bytes call(const std::string& op, std::string_view video_id, const nlohmann::json& params,
             const std::map<std::string, Bytes>& inputs) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// "process:<path>" or "http://..." -> adapter.
std::shared_ptr<AdapterClient> make_adapter(const std::string& address);

// Backends forwarding to an adapter. `id` names the external model and enters
// cache keys; `params` are merged into every control message.
std::shared_ptr<Interpolator> external_interpolator(std::shared_ptr<AdapterClient> client,
                                                    std::string id, nlohmann::json params = {});
std::shared_ptr<Embedder> external_embedder(std::shared_ptr<AdapterClient> client,
                                            std::string id, nlohmann::json params = {});
std::shared_ptr<Grounder> external_grounder(std::shared_ptr<AdapterClient> client,
                                            std::string id, nlohmann::json params = {});
std::shared_ptr<MaskPropagator> external_propagator(std::shared_ptr<AdapterClient> client,
                                                    std::string id, nlohmann::json params = {});
std::shared_ptr<AutoSegmenter> external_segmenter(std::shared_ptr<AdapterClient> client,
                                                  std::string id, nlohmann::json params = {});
std::shared_ptr<PointTracker> external_tracker(std::shared_ptr<AdapterClient> client,
                                               std::string id, nlohmann::json params = {});
std::shared_ptr<PhraseExtractor> external_extractor(std::shared_ptr<AdapterClient> client,
                                                    std::string id, nlohmann::json params = {});

// Payload helpers for the JSON outputs, shared with adapter implementations.
nlohmann::json grounding_to_json(const std::vector<GroundedPhrase>& grounding);
std::vector<GroundedPhrase> grounding_from_json(const nlohmann::json& j);
nlohmann::json phrases_to_json(const std::vector<TaggedPhrase>& phrases);
std::vector<TaggedPhrase> phrases_from_json(const nlohmann::json& j);

}  // namespace dyneval::backends
