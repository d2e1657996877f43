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

// Procedural prompt curation: scene metadata sampled from editable lexicons,
// rendered into descriptive prompts by a chat-completion model.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dyneval {

inline constexpr const char* kSettings[] = {"indoor", "outdoor-land", "outdoor-water"};
inline constexpr const char* kSubjectCategories[] = {"human", "animal", "vehicle", "object"};
inline constexpr const char* kSubjectCounts[] = {"one", "two", "three", "many"};

struct LexiconScene {
  std::string name;
  std::string setting;
};

struct LexiconSubject {
  std::string name;
  std::string category;
  std::vector<std::string> settings;  // where the subject may appear
  std::vector<std::string> actions;   // "" is the empty action
  std::string action_dataset;         // source list of the actions, may be empty
};

struct Lexicon {
  std::vector<LexiconScene> scenes;
  std::vector<LexiconSubject> subjects;
  std::vector<std::string> camera_types;
  std::vector<std::string> camera_movements;
  std::vector<std::string> subject_counts{"one", "two", "three", "many"};

  // Throws InvalidInput on unknown tags, empty lists, subjects without any
  // action, or scenes no subject can appear in.
  void validate() const;

  // Number of distinct metadata tuples the lexicon can produce.
  std::uint64_t tuple_count() const;
};

Lexicon lexicon_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Lexicon& lex);
Lexicon load_lexicon(const std::filesystem::path& path);

struct SceneMetadata {
  std::string setting;
  std::string action_dataset;
  std::string scene;
  std::string subject;
  std::string number_of_subjects;
  std::string action;
  std::string camera_type;
  std::string camera_movement;
  std::string extra_attributes;

  bool operator==(const SceneMetadata&) const = default;
};

// The nested layout of the published example, including its
// "extra attibutes" key. Parsing also accepts "extra_attributes".
nlohmann::json to_json(const SceneMetadata& m);
SceneMetadata scene_metadata_from_json(const nlohmann::json& j);

// Deterministic per seed. The scene is uniform over all scenes, the subject
// uniform over the subjects compatible with the scene's setting, the action
// uniform over that subject's actions, and the camera fields and count
// uniform over their lists.
SceneMetadata sample_scene_metadata(const Lexicon& lex, std::uint64_t seed);

// Stable id derived from the canonical metadata text.
std::string prompt_id_for(const SceneMetadata& m);

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string model_id() const = 0;
  // Returns the completion text. Throws RetriableError on timeouts,
  // refusals and empty answers.
  virtual std::string complete(const std::string& system, const std::string& user,
                               const std::string& idempotency_key) = 0;
};

// Deterministic offline client that writes a sentence from the metadata
// fields embedded in the user message.
class TemplateLlmClient final : public LlmClient {
 public:
  std::string model_id() const override { return "template-v1"; }
  std::string complete(const std::string& system, const std::string& user,
                       const std::string& idempotency_key) override;
};

struct HttpLlmConfig {
  std::string endpoint;  // full chat-completions URL
  std::string model = "gpt-4o";
  std::string api_key_env = "DYNEVAL_LLM_API_KEY";
  double temperature = 0.7;
  int retries = 3;
  int initial_backoff_ms = 500;
  int timeout_s = 60;
};

// OpenAI-style chat-completion endpoint over libcurl.
std::unique_ptr<LlmClient> make_http_llm_client(HttpLlmConfig cfg);

// Retries RetriableError with exponential backoff; the last error escapes.
std::string complete_with_retry(LlmClient& client, const std::string& system,
                                const std::string& user, const std::string& key, int retries,
                                int initial_backoff_ms);

struct PromptTemplate {
  std::string version = "v1";
  std::string system;
  std::string exemplar_metadata;  // JSON text
  std::string exemplar_prompt;
};

const PromptTemplate& default_prompt_template();
std::string render_user_message(const SceneMetadata& m, const PromptTemplate& t);

struct RenderedPrompt {
  std::string prompt_id;
  std::string text;
  SceneMetadata metadata;
  std::string llm_model_id;
  std::string template_version;
  std::string created_at;
  bool mentions_camera_movement = false;
};

nlohmann::json to_json(const RenderedPrompt& p);
RenderedPrompt rendered_prompt_from_json(const nlohmann::json& j);

// True when a content word of the camera movement appears in the text.
bool mentions_camera_movement(std::string_view text, std::string_view movement);

struct RenderOptions {
  int retries = 3;
  int initial_backoff_ms = 500;
  std::string created_at;  // empty: current UTC time
};

RenderedPrompt render_prompt(const SceneMetadata& m, LlmClient& client,
                             const RenderOptions& opts = {},
                             const PromptTemplate& t = default_prompt_template());

struct SuiteOptions {
  int n = 100;
  std::uint64_t seed = 0;
  int concurrency = 4;
  RenderOptions render;
};

struct PromptSuite {
  std::vector<RenderedPrompt> prompts;
  // field -> value -> percentage of prompts
  std::map<std::string, std::map<std::string, double>> category_mix;
};

// n prompts with distinct metadata tuples. Throws InvalidInput when the
// lexicon cannot yield n distinct tuples.
PromptSuite build_suite(const Lexicon& lex, LlmClient& client, const SuiteOptions& opts);

nlohmann::json to_json(const PromptSuite& s);

}  // namespace dyneval
