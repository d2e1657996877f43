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

#include <fstream>

#include <gtest/gtest.h>
#include <httplib.h>

#include "dyneval/study_server.hpp"
#include "dyneval/study_store.hpp"
#include "fixtures.hpp"
#include "study_sim.hpp"

namespace dyneval::study {
namespace {

using nlohmann::json;
using namespace dyneval::testing;

json pool_json() {
  json payload = json::array(), gold = json::array(), sanity = json::array();
  for (const auto& p : make_payload(30)) payload.push_back(to_json(p));
  for (const auto& g : make_gold(4)) gold.push_back(to_json(g));
  for (const auto& s : make_sanity(2)) sanity.push_back(to_json(s));
  return {{"payload", payload},
          {"gold", gold},
          {"sanity", sanity},
          {"qualification", to_json(make_qualification())}};
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::ofstream(dir.path() / "pp-a0.mp4", std::ios::binary) << "fakevideo";
    ServerOptions opts;
    opts.admin_token = "tok";
    opts.video_dir = dir.path();
    server = std::make_unique<StudyServer>(store, opts);
    port = server->bind("127.0.0.1", 0);
    server->start();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  void TearDown() override { server->stop(); }

  httplib::Headers admin() const { return {{"Authorization", "Bearer tok"}}; }

  json load_pool() {
    auto res = client->Post("/admin/pool", admin(), pool_json().dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    return json::parse(res->body);
  }

  void qualify(const std::string& worker) {
    const auto t = make_qualification();
    const auto a = qualification_answers(t, 10, 3);
    json body = {{"mcq", a.mcq}, {"gold", json::object()}};
    for (const auto& [id, c] : a.gold_distorted) body["gold"][id] = c == 0 ? "left" : "right";
    auto res = client->Post("/qualification/" + worker, body.dump(), "application/json");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200) << res->body;
    EXPECT_TRUE(json::parse(res->body).at("qualification").at("passed").get<bool>());
  }

  TempDir dir{"server"};
  StudyStore store{":memory:", StoreOptions{3, 5.0, "USD", 9}};
  std::unique_ptr<StudyServer> server;
  std::unique_ptr<httplib::Client> client;
  int port = 0;
};

TEST_F(ServerTest, AdminRoutesNeedTheToken) {
  EXPECT_EQ(client->Get("/export/annotations")->status, 401);
  EXPECT_EQ(client->Get("/export/annotations", {{"Authorization", "Bearer nope"}})->status, 401);
  EXPECT_EQ(client->Post("/admin/pool", "{}", "application/json")->status, 401);
  EXPECT_EQ(client->Get("/admin/stats")->status, 401);
  auto ok = client->Get("/export/annotations", admin());
  EXPECT_EQ(ok->status, 200);
  EXPECT_EQ(json::parse(ok->body), json::array());
}

TEST_F(ServerTest, FullFlowProducesThirtyVotes) {
  const auto loaded = load_pool();
  EXPECT_EQ(loaded.at("loaded").at("payload"), 30);

  auto cfg = client->Get("/config");
  EXPECT_EQ(json::parse(cfg->body).at("pages_per_hit"), 20);

  auto q = client->Get("/qualification");
  ASSERT_EQ(q->status, 200);
  EXPECT_EQ(q->body.find("\"answer\""), std::string::npos);

  EXPECT_EQ(client->Get("/hit?worker=w1")->status, 403);
  qualify("w1");
  auto hit_res = client->Get("/hit?worker=w1");
  ASSERT_EQ(hit_res->status, 200);
  const json served = json::parse(hit_res->body);
  const std::string hit_id = served.at("hit_id");
  ASSERT_EQ(served.at("pages").size(), 20u);

  const auto hit = store.find_hit(hit_id);
  ASSERT_TRUE(hit.has_value());
  const json body = to_json(answer_hit(*hit, "w1"));
  auto r1 = client->Post("/hit/" + hit_id + "/response", body.dump(), "application/json");
  ASSERT_EQ(r1->status, 200);
  const json receipt = json::parse(r1->body);
  EXPECT_TRUE(receipt.at("accepted").get<bool>());
  EXPECT_EQ(receipt.at("votes"), 30);

  auto r2 = client->Post("/hit/" + hit_id + "/response", body.dump(), "application/json");
  EXPECT_EQ(r2->body, r1->body);

  auto exp = client->Get("/export/annotations", admin());
  const auto ann = annotations_from_json(json::parse(exp->body));
  EXPECT_EQ(ann.size(), 30u);

  auto stats = client->Get("/admin/stats", admin());
  EXPECT_EQ(stats->status, 200);
}

TEST_F(ServerTest, MalformedRequestsAreRejected) {
  load_pool();
  qualify("w2");
  const json served = json::parse(client->Get("/hit?worker=w2")->body);
  const std::string hit_id = served.at("hit_id");
  EXPECT_EQ(client->Post("/hit/" + hit_id + "/response", "{not json", "application/json")->status,
            400);
  json partial = {{"worker_id", "w2"}, {"answers", json::array()}};
  EXPECT_EQ(client->Post("/hit/" + hit_id + "/response", partial.dump(), "application/json")->status,
            400);
  EXPECT_EQ(client->Post("/hit/hit-nope/response", partial.dump(), "application/json")->status, 404);
  EXPECT_EQ(client->Get("/hit")->status, 400);
}

TEST_F(ServerTest, ServesVideoFiles) {
  auto v = client->Get("/videos/pp-a0");
  ASSERT_TRUE(v);
  EXPECT_EQ(v->status, 200);
  EXPECT_EQ(v->body, "fakevideo");
  EXPECT_EQ(v->get_header_value("Content-Type"), "video/mp4");
  EXPECT_EQ(client->Get("/videos/missing")->status, 404);
  EXPECT_EQ(client->Get("/videos/..")->status, 404);
}

TEST(Service, NoQualificationConfigured) {
  StudyStore store(":memory:");
  StudyService svc(store, {});
  EXPECT_EQ(svc.get_qualification().status, 404);
  EXPECT_EQ(svc.export_annotations("Bearer ").status, 401);
}

}  // namespace
}  // namespace dyneval::study
