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

#include "dyneval/prompt_suite.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <cstring>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include <curl/curl.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dyneval/error.hpp"
#include "dyneval/hashing.hpp"
#include "dyneval/manifest.hpp"
#include "dyneval/random.hpp"

namespace dyneval {

using nlohmann::json;

namespace {

template <std::size_t N>
bool one_of(const std::string& v, const char* const (&set)[N]) {
  return std::any_of(std::begin(set), std::end(set), [&](const char* s) { return v == s; });
}

constexpr const char* kMetadataMarker = "### Scene metadata";

}  // namespace

void Lexicon::validate() const {
  if (scenes.empty()) throw InvalidInput("lexicon has no scenes");
  if (subjects.empty()) throw InvalidInput("lexicon has no subjects");
  if (camera_types.empty()) throw InvalidInput("lexicon has no camera types");
  if (camera_movements.empty()) throw InvalidInput("lexicon has no camera movements");
  if (subject_counts.empty()) throw InvalidInput("lexicon has no subject counts");
  for (const auto& c : subject_counts) {
    if (!one_of(c, kSubjectCounts)) throw InvalidInput("unknown subject count '" + c + "'");
  }
  for (const auto& s : scenes) {
    if (s.name.empty()) throw InvalidInput("lexicon scene without a name");
    if (!one_of(s.setting, kSettings)) {
      throw InvalidInput(fmt::format("scene '{}' has unknown setting '{}'", s.name, s.setting));
    }
  }
  for (const auto& s : subjects) {
    if (s.name.empty()) throw InvalidInput("lexicon subject without a name");
    if (!one_of(s.category, kSubjectCategories)) {
      throw InvalidInput(
          fmt::format("subject '{}' has unknown category '{}'", s.name, s.category));
    }
    if (s.settings.empty()) throw InvalidInput(fmt::format("subject '{}' has no settings", s.name));
    for (const auto& t : s.settings) {
      if (!one_of(t, kSettings)) {
        throw InvalidInput(fmt::format("subject '{}' has unknown setting '{}'", s.name, t));
      }
    }
    if (s.actions.empty()) {
      throw InvalidInput(fmt::format("subject '{}' has no action (use \"\" for none)", s.name));
    }
  }
  for (const auto& sc : scenes) {
    const bool any = std::any_of(subjects.begin(), subjects.end(), [&](const LexiconSubject& s) {
      return std::find(s.settings.begin(), s.settings.end(), sc.setting) != s.settings.end();
    });
    if (!any) throw InvalidInput(fmt::format("no subject can appear in scene '{}'", sc.name));
  }
}

std::uint64_t Lexicon::tuple_count() const {
  std::uint64_t per_camera = 0;
  for (const auto& sc : scenes) {
    for (const auto& s : subjects) {
      if (std::find(s.settings.begin(), s.settings.end(), sc.setting) != s.settings.end()) {
        per_camera += s.actions.size();
      }
    }
  }
  return per_camera * camera_types.size() * camera_movements.size() * subject_counts.size();
}

Lexicon lexicon_from_json(const json& j) {
  Lexicon lex;
  try {
    for (const auto& s : j.at("scenes")) {
      lex.scenes.push_back({s.at("name").get<std::string>(), s.at("setting").get<std::string>()});
    }
    for (const auto& s : j.at("subjects")) {
      LexiconSubject sub;
      sub.name = s.at("name").get<std::string>();
      sub.category = s.at("category").get<std::string>();
      sub.settings = s.at("settings").get<std::vector<std::string>>();
      sub.actions = s.value("actions", std::vector<std::string>{});
      sub.action_dataset = s.value("action_dataset", std::string());
      lex.subjects.push_back(std::move(sub));
    }
    lex.camera_types = j.at("camera_types").get<std::vector<std::string>>();
    lex.camera_movements = j.at("camera_movements").get<std::vector<std::string>>();
    if (j.contains("subject_counts")) {
      lex.subject_counts = j.at("subject_counts").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("lexicon: ") + e.what());
  }
  lex.validate();
  return lex;
}

json to_json(const Lexicon& lex) {
  json scenes = json::array(), subjects = json::array();
  for (const auto& s : lex.scenes) scenes.push_back({{"name", s.name}, {"setting", s.setting}});
  for (const auto& s : lex.subjects) {
    subjects.push_back({{"name", s.name},
                        {"category", s.category},
                        {"settings", s.settings},
                        {"actions", s.actions},
                        {"action_dataset", s.action_dataset}});
  }
  return {{"scenes", scenes},
          {"subjects", subjects},
          {"camera_types", lex.camera_types},
          {"camera_movements", lex.camera_movements},
          {"subject_counts", lex.subject_counts}};
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  try {
    return lexicon_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw InvalidInput(fmt::format("{}: {}", path.string(), e.what()));
  }
}

json to_json(const SceneMetadata& m) {
  return {{"setting", m.setting},
          {"action_dataset", m.action_dataset},
          {"metadata",
           {{"scene", m.scene},
            {"subject",
             {{"name", m.subject},
              {"number_of_subjects", m.number_of_subjects},
              {"action", m.action}}},
            {"camera", {{"type", m.camera_type}, {"movement", m.camera_movement}}},
            {"extra attibutes", m.extra_attributes}}}};
}

SceneMetadata scene_metadata_from_json(const json& j) {
  SceneMetadata m;
  try {
    m.setting = j.at("setting").get<std::string>();
    m.action_dataset = j.value("action_dataset", std::string());
    const json& md = j.at("metadata");
    m.scene = md.at("scene").get<std::string>();
    const json& s = md.at("subject");
    m.subject = s.at("name").get<std::string>();
    m.number_of_subjects = s.at("number_of_subjects").get<std::string>();
    m.action = s.value("action", std::string());
    m.camera_type = md.at("camera").at("type").get<std::string>();
    m.camera_movement = md.at("camera").at("movement").get<std::string>();
    if (md.contains("extra attibutes")) {
      m.extra_attributes = md.at("extra attibutes").get<std::string>();
    } else {
      m.extra_attributes = md.value("extra_attributes", std::string());
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("scene metadata: ") + e.what());
  }
  return m;
}

SceneMetadata sample_scene_metadata(const Lexicon& lex, std::uint64_t seed) {
  Rng rng(seed);
  const auto& scene = lex.scenes[rng.index(lex.scenes.size())];
  std::vector<const LexiconSubject*> compatible;
  for (const auto& s : lex.subjects) {
    if (std::find(s.settings.begin(), s.settings.end(), scene.setting) != s.settings.end()) {
      compatible.push_back(&s);
    }
  }
  if (compatible.empty()) {
    throw InvalidInput(fmt::format("no subject is compatible with scene '{}'", scene.name));
  }
  const LexiconSubject& subject = *compatible[rng.index(compatible.size())];
  if (subject.actions.empty()) {
    throw InvalidInput(fmt::format("subject '{}' has no compatible action", subject.name));
  }
  SceneMetadata m;
  m.setting = scene.setting;
  m.action_dataset = subject.action_dataset;
  m.scene = scene.name;
  m.subject = subject.name;
  m.action = subject.actions[rng.index(subject.actions.size())];
  m.number_of_subjects = lex.subject_counts[rng.index(lex.subject_counts.size())];
  m.camera_type = lex.camera_types[rng.index(lex.camera_types.size())];
  m.camera_movement = lex.camera_movements[rng.index(lex.camera_movements.size())];
  return m;
}

std::string prompt_id_for(const SceneMetadata& m) {
  return "p" + sha256_hex(to_json(m).dump()).substr(0, 12);
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string article_phrase(const std::string& count, const std::string& name) {
  if (count == "one" || count.empty()) return "a lone " + name;
  if (count == "many") return "many " + name + "s";
  return count + " " + name + "s";
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string TemplateLlmClient::complete(const std::string&, const std::string& user,
                                        const std::string&) {
  const auto pos = user.rfind(kMetadataMarker);
  if (pos == std::string::npos) throw RetriableError("template client: no metadata in message");
  SceneMetadata m;
  try {
    m = scene_metadata_from_json(json::parse(user.substr(pos + std::strlen(kMetadataMarker))));
  } catch (const json::exception& e) {
    throw RetriableError(std::string("template client: ") + e.what());
  }
  std::string text = fmt::format("In a {}, {}", m.scene, article_phrase(m.number_of_subjects, m.subject));
  text += m.action.empty() ? " stands in view." : " is " + m.action + ".";
  text += fmt::format(" The {} camera performs a {}, keeping the {} in focus.", m.camera_type,
                      m.camera_movement, m.subject);
  if (!m.extra_attributes.empty()) text += " " + m.extra_attributes + ".";
  return text;
}

std::string complete_with_retry(LlmClient& client, const std::string& system,
                                const std::string& user, const std::string& key, int retries,
                                int initial_backoff_ms) {
  int backoff = initial_backoff_ms;
  for (int attempt = 0;; ++attempt) {
    try {
      std::string out = client.complete(system, user, key);
      if (out.empty()) throw RetriableError("empty completion");
      return out;
    } catch (const RetriableError& e) {
      if (attempt >= retries) throw;
      spdlog::warn("completion for {} failed ({}); retry {} of {}", key, e.what(), attempt + 1,
                   retries);
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
  }
}

namespace {

class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(HttpLlmConfig cfg) : cfg_(std::move(cfg)) {
    static std::once_flag once;
    std::call_once(once, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
    if (cfg_.endpoint.empty()) throw InvalidInput("LLM endpoint not configured");
  }

  std::string model_id() const override { return cfg_.model; }

  std::string complete(const std::string& system, const std::string& user,
                       const std::string& key) override {
    const json body = {{"model", cfg_.model},
                       {"temperature", cfg_.temperature},
                       {"messages",
                        {{{"role", "system"}, {"content", system}},
                         {{"role", "user"}, {"content", user}}}}};
    const std::string payload = body.dump();
    std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), curl_easy_cleanup);
    if (!curl) throw RetriableError("curl_easy_init failed");

    curl_slist* headers = nullptr;
    headers = curl_slist_append(headers, "Content-Type: application/json");
    headers = curl_slist_append(headers, ("Idempotency-Key: " + key).c_str());
    if (const char* token = std::getenv(cfg_.api_key_env.c_str())) {
      headers = curl_slist_append(headers, (std::string("Authorization: Bearer ") + token).c_str());
    }
    std::unique_ptr<curl_slist, decltype(&curl_slist_free_all)> guard(headers,
                                                                       curl_slist_free_all);
    std::string response;
    curl_easy_setopt(curl.get(), CURLOPT_URL, cfg_.endpoint.c_str());
    curl_easy_setopt(curl.get(), CURLOPT_HTTPHEADER, headers);
    curl_easy_setopt(curl.get(), CURLOPT_POSTFIELDS, payload.c_str());
    curl_easy_setopt(curl.get(), CURLOPT_POSTFIELDSIZE, static_cast<long>(payload.size()));
    curl_easy_setopt(curl.get(), CURLOPT_TIMEOUT, static_cast<long>(cfg_.timeout_s));
    curl_easy_setopt(curl.get(), CURLOPT_NOSIGNAL, 1L);
    curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, &HttpLlmClient::write);
    curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &response);
    const CURLcode rc = curl_easy_perform(curl.get());
    if (rc != CURLE_OK) throw RetriableError(std::string("LLM request: ") + curl_easy_strerror(rc));
    long status = 0;
    curl_easy_getinfo(curl.get(), CURLINFO_RESPONSE_CODE, &status);
    if (status == 429 || status >= 500) throw RetriableError(fmt::format("LLM HTTP {}", status));
    if (status != 200) throw BackendError(fmt::format("LLM HTTP {}: {}", status, response));
    try {
      const json doc = json::parse(response);
      const json& choice = doc.at("choices").at(0);
      if (choice.value("finish_reason", std::string()) == "content_filter") {
        throw RetriableError("LLM refused the request");
      }
      const json& content = choice.at("message").at("content");
      if (!content.is_string()) throw RetriableError("LLM returned no text");
      return content.get<std::string>();
    } catch (const json::exception& e) {
      throw RetriableError(std::string("LLM response: ") + e.what());
    }
  }

 private:
  static std::size_t write(char* ptr, std::size_t size, std::size_t n, void* user) {
    static_cast<std::string*>(user)->append(ptr, size * n);
    return size * n;
  }

  HttpLlmConfig cfg_;
};

}  // namespace

std::unique_ptr<LlmClient> make_http_llm_client(HttpLlmConfig cfg) {
  return std::make_unique<HttpLlmClient>(std::move(cfg));
}

const PromptTemplate& default_prompt_template() {
  static const PromptTemplate t = [] {
    PromptTemplate p;
    p.system =
        "You write prompts for a text-to-video model. Given scene metadata in JSON, write one "
        "or two vivid sentences describing the scene, the subject and its action, and the "
        "camera. Name the camera type and the camera movement explicitly. Answer with the "
        "prompt text only.";
    SceneMetadata ex;
    ex.setting = "indoor";
    ex.action_dataset = "comclip";
    ex.scene = "auto factory";
    ex.subject = "dog";
    ex.number_of_subjects = "one";
    ex.action = "drinking the water";
    ex.camera_type = "ground shot";
    ex.camera_movement = "dolly shot";
    p.exemplar_metadata = to_json(ex).dump(2);
    p.exemplar_prompt =
        "In an auto factory, a lone dog drinks water from a puddle amidst hulking machinery and "
        "assembly lines. The ground shot dolly camera moves forward, revealing industrial "
        "surroundings with the dog in sharp focus.";
    return p;
  }();
  return t;
}

std::string render_user_message(const SceneMetadata& m, const PromptTemplate& t) {
  return fmt::format("Example metadata:\n{}\nExample prompt:\n{}\n\n{}\n{}\n", t.exemplar_metadata,
                     t.exemplar_prompt, kMetadataMarker, to_json(m).dump(2));
}

bool mentions_camera_movement(std::string_view text, std::string_view movement) {
  static const std::set<std::string> generic = {"shot", "move", "movement", "camera", "the",
                                                "a",    "of",   "and",      "to",     "with"};
  const std::string t = lower(text);
  const std::string mv = lower(movement);
  if (t.find(mv) != std::string::npos) return true;
  std::size_t i = 0;
  while (i < mv.size()) {
    while (i < mv.size() && !std::isalnum(static_cast<unsigned char>(mv[i]))) ++i;
    std::size_t j = i;
    while (j < mv.size() && std::isalnum(static_cast<unsigned char>(mv[j]))) ++j;
    const std::string word = mv.substr(i, j - i);
    if (!word.empty() && !generic.count(word) && t.find(word) != std::string::npos) return true;
    i = j;
  }
  return false;
}

RenderedPrompt render_prompt(const SceneMetadata& m, LlmClient& client, const RenderOptions& opts,
                             const PromptTemplate& t) {
  RenderedPrompt p;
  p.prompt_id = prompt_id_for(m);
  std::string text = complete_with_retry(client, t.system, render_user_message(m, t),
                                         p.prompt_id + "/" + t.version, opts.retries,
                                         opts.initial_backoff_ms);
  const auto b = text.find_first_not_of(" \t\r\n\"");
  const auto e = text.find_last_not_of(" \t\r\n\"");
  text = b == std::string::npos ? std::string() : text.substr(b, e - b + 1);
  if (text.empty()) throw RetriableError("completion is blank");
  p.text = std::move(text);
  p.metadata = m;
  p.llm_model_id = client.model_id();
  p.template_version = t.version;
  p.created_at = opts.created_at.empty() ? utc_now() : opts.created_at;
  p.mentions_camera_movement = mentions_camera_movement(p.text, m.camera_movement);
  if (!p.mentions_camera_movement) {
    spdlog::warn("prompt {} does not name its camera movement '{}'", p.prompt_id,
                 m.camera_movement);
  }
  return p;
}

json to_json(const RenderedPrompt& p) {
  return {{"prompt_id", p.prompt_id},
          {"text", p.text},
          {"metadata", to_json(p.metadata)},
          {"llm_model_id", p.llm_model_id},
          {"template_version", p.template_version},
          {"created_at", p.created_at},
          {"mentions_camera_movement", p.mentions_camera_movement}};
}

RenderedPrompt rendered_prompt_from_json(const json& j) {
  RenderedPrompt p;
  try {
    p.prompt_id = j.at("prompt_id").get<std::string>();
    p.text = j.at("text").get<std::string>();
    p.metadata = scene_metadata_from_json(j.at("metadata"));
    p.llm_model_id = j.value("llm_model_id", std::string());
    p.template_version = j.value("template_version", std::string());
    p.created_at = j.value("created_at", std::string());
    p.mentions_camera_movement = j.value("mentions_camera_movement", false);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("rendered prompt: ") + e.what());
  }
  return p;
}

PromptSuite build_suite(const Lexicon& lex, LlmClient& client, const SuiteOptions& opts) {
  if (opts.n < 1) throw InvalidInput("suite size must be >= 1");
  lex.validate();
  if (lex.tuple_count() < static_cast<std::uint64_t>(opts.n)) {
    throw InvalidInput(fmt::format("lexicon yields {} distinct tuples, {} requested",
                                   lex.tuple_count(), opts.n));
  }
  std::vector<SceneMetadata> chosen;
  std::set<std::string> seen;
  const std::uint64_t max_draws = 1000ULL * static_cast<std::uint64_t>(opts.n) + 10000;
  for (std::uint64_t draw = 0; static_cast<int>(chosen.size()) < opts.n; ++draw) {
    if (draw >= max_draws) {
      throw InvalidInput(fmt::format("only {} distinct tuples found in {} draws", chosen.size(),
                                     max_draws));
    }
    SceneMetadata m = sample_scene_metadata(lex, mix_seed(opts.seed, draw));
    if (seen.insert(to_json(m).dump()).second) chosen.push_back(std::move(m));
  }

  PromptSuite suite;
  suite.prompts.resize(chosen.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < chosen.size();) {
      try {
        suite.prompts[i] = render_prompt(chosen[i], client, opts.render);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = chosen.size();
      }
    }
  };
  const int threads = std::clamp(opts.concurrency, 1, static_cast<int>(chosen.size()));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::map<std::string, std::string> category;
  for (const auto& s : lex.subjects) category[s.name] = s.category;
  const double unit = 100.0 / static_cast<double>(suite.prompts.size());
  for (const auto& p : suite.prompts) {
    const auto& m = p.metadata;
    suite.category_mix["setting"][m.setting] += unit;
    suite.category_mix["subject_category"][category[m.subject]] += unit;
    suite.category_mix["number_of_subjects"][m.number_of_subjects] += unit;
    suite.category_mix["camera_type"][m.camera_type] += unit;
    suite.category_mix["camera_movement"][m.camera_movement] += unit;
  }
  return suite;
}

json to_json(const PromptSuite& s) {
  json prompts = json::array();
  for (const auto& p : s.prompts) prompts.push_back(to_json(p));
  return {{"prompts", prompts}, {"category_mix", s.category_mix}};
}

}  // namespace dyneval
