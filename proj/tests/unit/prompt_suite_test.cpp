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

#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "dyneval/error.hpp"
#include "dyneval/prompt_suite.hpp"

namespace dyneval {
namespace {

using nlohmann::json;

const std::filesystem::path kLexicon = std::filesystem::path(DYNEVAL_SOURCE_DIR) / "data" /
                                       "lexicon_sample.json";

// Upper alpha = 0.01 quantile of chi-square with k dof (Wilson-Hilferty).
double chi2_critical(int k) {
  const double z = 2.326347874;
  const double a = 2.0 / (9.0 * k);
  return k * std::pow(1 - a + z * std::sqrt(a), 3);
}

double chi2_uniform(const std::map<std::string, int>& counts, int categories) {
  int n = 0;
  for (const auto& [_, c] : counts) n += c;
  const double e = double(n) / categories;
  double chi2 = (categories - static_cast<int>(counts.size())) * e;
  for (const auto& [_, c] : counts) chi2 += (c - e) * (c - e) / e;
  return chi2;
}

Lexicon singleton_lexicon() {
  Lexicon lex;
  lex.scenes = {{"auto factory", "indoor"}};
  lex.subjects = {{"dog", "animal", {"indoor"}, {"drinking the water"}, "comclip"}};
  lex.camera_types = {"ground shot"};
  lex.camera_movements = {"dolly shot"};
  lex.subject_counts = {"one"};
  return lex;
}

TEST(Lexicon, SampleFileValidates) {
  const Lexicon lex = load_lexicon(kLexicon);
  EXPECT_NO_THROW(lex.validate());
  EXPECT_GE(lex.scenes.size(), 20u);
  EXPECT_GE(lex.tuple_count(), 100u);
}

TEST(Lexicon, RejectsUnknownSetting) {
  Lexicon lex = singleton_lexicon();
  lex.scenes[0].setting = "orbit";
  EXPECT_THROW(lex.validate(), InvalidInput);
}

TEST(Sampling, SingletonLexiconIsForced) {
  const Lexicon lex = singleton_lexicon();
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto m = sample_scene_metadata(lex, s);
    EXPECT_EQ(m.scene, "auto factory");
    EXPECT_EQ(m.subject, "dog");
    EXPECT_EQ(m.action, "drinking the water");
    EXPECT_EQ(m.camera_movement, "dolly shot");
  }
}

TEST(Sampling, CompatibilityHoldsForTenThousandSeeds) {
  const Lexicon lex = load_lexicon(kLexicon);
  std::map<std::string, const LexiconSubject*> subjects;
  for (const auto& s : lex.subjects) subjects[s.name] = &s;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto m = sample_scene_metadata(lex, seed);
    const auto* subj = subjects.at(m.subject);
    ASSERT_NE(std::find(subj->settings.begin(), subj->settings.end(), m.setting),
              subj->settings.end());
    ASSERT_NE(std::find(subj->actions.begin(), subj->actions.end(), m.action),
              subj->actions.end());
  }
}

TEST(Sampling, FieldFrequenciesAreUniform) {
  const Lexicon lex = load_lexicon(kLexicon);
  std::map<std::string, int> scenes, movements, types;
  std::map<std::string, std::map<std::string, int>> subject_by_setting;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto m = sample_scene_metadata(lex, seed);
    ++scenes[m.scene];
    ++movements[m.camera_movement];
    ++types[m.camera_type];
    ++subject_by_setting[m.setting][m.subject];
  }
  const int ns = static_cast<int>(lex.scenes.size());
  EXPECT_LT(chi2_uniform(scenes, ns), chi2_critical(ns - 1));
  const int nm = static_cast<int>(lex.camera_movements.size());
  EXPECT_LT(chi2_uniform(movements, nm), chi2_critical(nm - 1));
  const int nt = static_cast<int>(lex.camera_types.size());
  EXPECT_LT(chi2_uniform(types, nt), chi2_critical(nt - 1));
  for (const auto& [setting, counts] : subject_by_setting) {
    int compatible = 0;
    for (const auto& s : lex.subjects) {
      compatible += std::count(s.settings.begin(), s.settings.end(), setting) > 0;
    }
    if (compatible < 2) continue;
    EXPECT_LT(chi2_uniform(counts, compatible), chi2_critical(compatible - 1)) << setting;
  }
}

TEST(Metadata, RoundTripUsesPublishedKeys) {
  const auto m = sample_scene_metadata(load_lexicon(kLexicon), 3);
  const json j = to_json(m);
  EXPECT_EQ(scene_metadata_from_json(json::parse(j.dump())), m);
  EXPECT_TRUE(j.dump().find("extra attibutes") != std::string::npos);
  EXPECT_EQ(j.dump(), to_json(scene_metadata_from_json(j)).dump());
}

TEST(Render, TemplateClientOnExemplarNamesTheCameraMove) {
  const auto m = sample_scene_metadata(singleton_lexicon(), 0);
  TemplateLlmClient client;
  RenderOptions opts;
  opts.created_at = "2026-01-01T00:00:00Z";
  const auto p = render_prompt(m, client, opts);
  EXPECT_NE(p.text.find("dolly shot"), std::string::npos);
  EXPECT_NE(p.text.find("dog"), std::string::npos);
  EXPECT_NE(p.text.find("auto factory"), std::string::npos);
  EXPECT_TRUE(p.mentions_camera_movement);
  EXPECT_EQ(p.metadata, m);
  EXPECT_EQ(p.prompt_id, prompt_id_for(m));
  EXPECT_EQ(rendered_prompt_from_json(to_json(p)).text, p.text);
}

TEST(Render, UserMessageEmbedsTheExemplar) {
  const auto msg = render_user_message(sample_scene_metadata(singleton_lexicon(), 0),
                                       default_prompt_template());
  EXPECT_NE(msg.find("a lone dog drinks water"), std::string::npos);
}

TEST(Render, CameraMentionCheck) {
  EXPECT_TRUE(mentions_camera_movement("The camera pans left slowly", "pan left"));
  EXPECT_FALSE(mentions_camera_movement("A dog sleeps", "dolly shot"));
}

class FlakyClient : public LlmClient {
 public:
  explicit FlakyClient(int failures) : failures_(failures) {}
  std::string model_id() const override { return "flaky"; }
  std::string complete(const std::string&, const std::string&, const std::string&) override {
    if (calls_++ < failures_) throw RetriableError("timeout");
    return "A dog in a factory, dolly shot.";
  }
  int calls() const { return calls_; }

 private:
  int failures_;
  std::atomic<int> calls_{0};
};

TEST(Render, RetriesThenGivesUpWithoutRecord) {
  FlakyClient two(2);
  EXPECT_EQ(complete_with_retry(two, "s", "u", "k", 3, 1), "A dog in a factory, dolly shot.");
  EXPECT_EQ(two.calls(), 3);
  FlakyClient many(10);
  RenderOptions opts;
  opts.retries = 2;
  opts.initial_backoff_ms = 1;
  EXPECT_THROW(render_prompt(sample_scene_metadata(singleton_lexicon(), 0), many, opts),
               RetriableError);
  EXPECT_EQ(many.calls(), 3);
}

TEST(Suite, HundredDistinctPrompts) {
  TemplateLlmClient client;
  SuiteOptions opts;
  opts.n = 100;
  opts.seed = 11;
  opts.render.created_at = "2026-01-01T00:00:00Z";
  const auto suite = build_suite(load_lexicon(kLexicon), client, opts);
  ASSERT_EQ(suite.prompts.size(), 100u);
  std::set<std::string> ids;
  for (const auto& p : suite.prompts) {
    ids.insert(p.prompt_id);
    EXPECT_FALSE(p.text.empty());
  }
  EXPECT_EQ(ids.size(), 100u);
  double total = 0;
  for (const auto& [_, pct] : suite.category_mix.at("setting")) total += pct;
  EXPECT_NEAR(total, 100.0, 1e-9);
  const auto again = build_suite(load_lexicon(kLexicon), client, opts);
  EXPECT_EQ(to_json(again).dump(), to_json(suite).dump());
}

TEST(Suite, SingleAndOversizedRequests) {
  TemplateLlmClient client;
  SuiteOptions opts;
  opts.n = 1;
  opts.render.created_at = "x";
  EXPECT_EQ(build_suite(singleton_lexicon(), client, opts).prompts.size(), 1u);
  opts.n = 2;
  EXPECT_THROW(build_suite(singleton_lexicon(), client, opts), InvalidInput);
}

TEST(HttpClient, SpeaksChatCompletions) {
  httplib::Server server;
  std::atomic<int> hits{0};
  json seen;
  std::string auth, idem;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 503;
      return;
    }
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    idem = req.get_header_value("Idempotency-Key");
    res.set_content(json{{"choices", {{{"message", {{"content", "A dog, dolly shot."}}}}}}}.dump(),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("DYNEVAL_TEST_LLM_KEY", "sekrit", 1);
  HttpLlmConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "test-model";
  cfg.api_key_env = "DYNEVAL_TEST_LLM_KEY";
  cfg.initial_backoff_ms = 1;
  auto client = make_http_llm_client(cfg);
  EXPECT_EQ(complete_with_retry(*client, "sys", "user", "key-1", 3, 1), "A dog, dolly shot.");
  server.stop();
  t.join();

  EXPECT_EQ(hits.load(), 2);
  EXPECT_EQ(seen.at("model"), "test-model");
  EXPECT_DOUBLE_EQ(seen.at("temperature").get<double>(), 0.7);
  EXPECT_EQ(seen.at("messages").size(), 2u);
  EXPECT_EQ(auth, "Bearer sekrit");
  EXPECT_EQ(idem, "key-1");
}

}  // namespace
}  // namespace dyneval
