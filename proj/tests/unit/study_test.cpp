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

#include <algorithm>
#include <map>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "dyneval/error.hpp"
#include "dyneval/study.hpp"
#include "dyneval/study_store.hpp"
#include "study_sim.hpp"

namespace dyneval::study {
namespace {

using namespace dyneval::testing;

class HitFixture : public ::testing::Test {
 protected:
  std::vector<StudyPair> payload = make_payload(15);
  std::vector<GoldPair> gold = make_gold(4);
  std::vector<SanityItem> sanity = make_sanity(2);
};

TEST_F(HitFixture, StructureOfOneHit) {
  const Hit h = assemble_hit(payload, gold, sanity, 1, "h1");
  ASSERT_EQ(h.pages.size(), 20u);
  std::map<PageRole, int> roles;
  std::multiset<int> repeated;
  for (const auto& p : h.pages) {
    ++roles[p.role];
    if (p.role == PageRole::repeat) repeated.insert(p.payload_index);
  }
  EXPECT_EQ(roles[PageRole::payload], 15);
  EXPECT_EQ(roles[PageRole::repeat], 2);
  EXPECT_EQ(roles[PageRole::gold], 2);
  EXPECT_EQ(roles[PageRole::sanity], 1);
  for (int idx : repeated) {
    EXPECT_GE(idx, 0);
    EXPECT_LT(idx, 15);
  }
  EXPECT_EQ(std::set<int>(repeated.begin(), repeated.end()).size(), 2u);
  const int rq = h.reliability_question_count();
  EXPECT_GE(rq, kMinReliabilityQuestions);
  EXPECT_LE(rq, kMaxReliabilityQuestions);
}

TEST_F(HitFixture, SeedsShuffleButKeepTheMultiset) {
  const Hit a = assemble_hit(payload, gold, sanity, 1);
  const Hit b = assemble_hit(payload, gold, sanity, 2);
  auto order = [](const Hit& h) {
    std::vector<std::string> ids;
    for (const auto& p : h.pages) ids.push_back(p.pair.pair_id);
    return ids;
  };
  auto payload_set = [](const Hit& h) {
    std::multiset<std::string> ids;
    for (const auto& p : h.pages)
      if (p.role == PageRole::payload) ids.insert(p.pair.pair_id);
    return ids;
  };
  EXPECT_NE(order(a), order(b));
  EXPECT_EQ(payload_set(a), payload_set(b));
  EXPECT_EQ(to_json(assemble_hit(payload, gold, sanity, 1)).dump(),
            to_json(assemble_hit(payload, gold, sanity, 1)).dump());
  EXPECT_EQ(to_json(hit_from_json(to_json(a))).dump(), to_json(a).dump());
}

TEST_F(HitFixture, ShortPoolsRejected) {
  EXPECT_THROW(assemble_hit(std::span(payload).first(14), gold, sanity, 1), InvalidInput);
  EXPECT_THROW(assemble_hit(payload, std::span(gold).first(1), sanity, 1), InvalidInput);
  EXPECT_THROW(assemble_hit(payload, gold, {}, 1), InvalidInput);
}

TEST_F(HitFixture, ServedPagesHideTheirRole) {
  const Hit h = assemble_hit(payload, gold, sanity, 4);
  const auto served = serve_hit(h);
  std::set<std::set<std::string>> key_sets;
  for (std::size_t i = 0; i < h.pages.size(); ++i) {
    const auto& page = served.at("pages").at(i);
    std::set<std::string> keys;
    for (const auto& [k, _] : page.items()) keys.insert(k);
    key_sets.insert(keys);
    const std::string text = page.dump();
    for (const char* leak : {"role", "gold", "repeat", "sanity", "payload", "answer", "swapped"}) {
      EXPECT_EQ(text.find(leak), std::string::npos) << leak << " in " << text;
    }
    for (const auto& q : page.at("questions")) {
      std::set<std::string> qk;
      for (const auto& [k, _] : q.items()) qk.insert(k);
      EXPECT_EQ(qk, (std::set<std::string>{"question_id", "kind", "text", "options"}));
    }
  }
  EXPECT_EQ(key_sets.size(), 1u);
  EXPECT_EQ(served.at("pages").at(19).at("total"), 20);
}

TEST_F(HitFixture, ReliabilityThreshold) {
  const Hit h = assemble_hit(payload, gold, sanity, 7, "h");
  const auto all = score_response(h, answer_hit(h, "w"));
  EXPECT_TRUE(all.accepted);
  EXPECT_EQ(all.reliability_correct, all.reliability_total);
  EXPECT_EQ(all.votes.size(), 30u);
  for (const auto& v : all.votes) EXPECT_EQ(v.preferred, Choice::a);

  const int total = all.reliability_total;
  ASSERT_EQ(total, 12);
  const auto nine = score_response(h, answer_hit(h, "w", 3));
  EXPECT_DOUBLE_EQ(nine.reliability_score, 0.75);
  EXPECT_FALSE(nine.accepted);
  EXPECT_TRUE(nine.votes.empty());
  const auto ten = score_response(h, answer_hit(h, "w", 2));
  EXPECT_TRUE(ten.accepted);
}

TEST_F(HitFixture, OppositeRepeatCountsAsIncorrect) {
  const Hit h = assemble_hit(payload, gold, sanity, 9, "h");
  auto sub = answer_hit(h, "w");
  for (std::size_t i = 0; i < h.pages.size(); ++i) {
    if (h.pages[i].role != PageRole::repeat) continue;
    for (auto& [d, c] : sub.pages[i].distorted) c = 1 - c;
    break;
  }
  const auto r = score_response(h, sub);
  EXPECT_EQ(r.reliability_correct, r.reliability_total - 2);
}

TEST_F(HitFixture, UnansweredQuestionRejectsWithoutScoring) {
  const Hit h = assemble_hit(payload, gold, sanity, 9, "h");
  auto sub = answer_hit(h, "w");
  sub.pages[6].distorted.erase(sub.pages[6].distorted.begin());
  EXPECT_THROW(score_response(h, sub), InvalidInput);
  sub = answer_hit(h, "w");
  sub.pages.pop_back();
  EXPECT_THROW(score_response(h, sub), InvalidInput);
}

TEST(Qualification, Boundaries) {
  const auto t = make_qualification();
  EXPECT_TRUE(grade_qualification(t, qualification_answers(t, 9, 3)).passed);
  EXPECT_TRUE(grade_qualification(t, qualification_answers(t, 10, 3)).passed);
  EXPECT_FALSE(grade_qualification(t, qualification_answers(t, 8, 3)).passed);
  EXPECT_FALSE(grade_qualification(t, qualification_answers(t, 10, 2)).passed);
  auto a = qualification_answers(t, 10, 3);
  a.mcq.erase("qm0");
  EXPECT_THROW(grade_qualification(t, a), InvalidInput);
  const auto served = serve_qualification(t).dump();
  EXPECT_EQ(served.find("answer"), std::string::npos);
  EXPECT_EQ(served.find("preferred"), std::string::npos);
}

class StoreFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    store = std::make_unique<StudyStore>(":memory:", StoreOptions{3, 5.0, "USD", 42});
    store->add_payload_pairs(make_payload(45));
    store->set_gold_pairs(make_gold(6));
    store->set_sanity_items(make_sanity(3));
    store->set_qualification_test(make_qualification());
  }
  void qualify(const std::string& w) {
    const auto t = *store->qualification_test();
    store->record_qualification(w, grade_qualification(t, qualification_answers(t, 10, 3)));
  }
  std::unique_ptr<StudyStore> store;
};

TEST_F(StoreFixture, EmptyStoreExportsNothing) {
  EXPECT_TRUE(store->export_annotations().empty());
}

TEST_F(StoreFixture, UnqualifiedWorkerGetsNoHit) {
  EXPECT_THROW(store->assign_hit("nobody"), InvalidInput);
  const auto t = *store->qualification_test();
  store->record_qualification("weak", grade_qualification(t, qualification_answers(t, 8, 3)));
  EXPECT_THROW(store->assign_hit("weak"), InvalidInput);
}

TEST_F(StoreFixture, OpenHitIsReturnedAgainAndSubmissionIsIdempotent) {
  qualify("w1");
  const Hit h = store->assign_hit("w1");
  EXPECT_EQ(store->assign_hit("w1").hit_id, h.hit_id);
  const auto r1 = store->submit_response(h.hit_id, answer_hit(h, "w1"));
  const auto r2 = store->submit_response(h.hit_id, answer_hit(h, "w1", 5));
  EXPECT_TRUE(r1.accepted);
  EXPECT_EQ(to_json(r1).dump(), to_json(r2).dump());
  const auto ann = store->export_annotations();
  EXPECT_EQ(ann.size(), 30u);
  for (const auto& a : ann) EXPECT_EQ(a.votes.votes.size(), 1u);
  EXPECT_NE(store->assign_hit("w1").hit_id, h.hit_id);
}

TEST_F(StoreFixture, RejectedHitContributesNothing) {
  qualify("w1");
  const Hit h = store->assign_hit("w1");
  EXPECT_FALSE(store->submit_response(h.hit_id, answer_hit(h, "w1", 6)).accepted);
  EXPECT_TRUE(store->export_annotations().empty());
  EXPECT_EQ(store->worker("w1")->rejected_hits, 1);
}

TEST_F(StoreFixture, WorkersNeverSeeAPairTwice) {
  qualify("w1");
  std::set<std::string> seen;
  for (int i = 0; i < 3; ++i) {
    const Hit h = store->assign_hit("w1");
    for (const auto& p : h.pages) {
      if (p.role != PageRole::payload) continue;
      EXPECT_TRUE(seen.insert(p.pair.pair_id).second) << p.pair.pair_id;
    }
    store->submit_response(h.hit_id, answer_hit(h, "w1"));
  }
  EXPECT_EQ(seen.size(), 45u);
  EXPECT_THROW(store->assign_hit("w1"), InvalidInput);
}

TEST_F(StoreFixture, ThreeWorkersGiveThreeVotesPerPair) {
  for (const char* w : {"w1", "w2", "w3"}) qualify(w);
  for (int round = 0; round < 3; ++round) {
    for (const char* w : {"w1", "w2", "w3"}) {
      const Hit h = store->assign_hit(w);
      store->submit_response(h.hit_id, answer_hit(h, w));
    }
  }
  const auto ann = store->export_annotations();
  EXPECT_EQ(ann.size(), 90u);
  for (const auto& a : ann) {
    EXPECT_EQ(a.votes.votes.size(), 3u);
    EXPECT_EQ(a.votes.majority(), Choice::a);
  }
}

TEST(StoreBalance, FiveHundredHitsServeEveryPairThriceBeforeAFourthTime) {
  StudyStore store(":memory:", StoreOptions{100, 5.0, "USD", 1});
  const int pairs = 600;
  store.add_payload_pairs(make_payload(pairs));
  store.set_gold_pairs(make_gold(6));
  store.set_sanity_items(make_sanity(3));
  store.set_qualification_test(make_qualification());
  const auto t = *store.qualification_test();
  std::map<std::string, int> served;
  int min_before_fourth = -1;
  for (int i = 0; i < 500; ++i) {
    const std::string w = "w" + std::to_string(i);
    store.record_qualification(w, grade_qualification(t, qualification_answers(t, 10, 3)));
    const Hit h = store.assign_hit(w);
    for (const auto& p : h.pages) {
      if (p.role != PageRole::payload) continue;
      if (++served[p.pair.pair_id] == 4 && min_before_fourth < 0) {
        int lo = 1 << 30;
        for (const auto& pp : make_payload(pairs)) lo = std::min(lo, served[pp.pair_id]);
        min_before_fourth = lo;
      }
    }
  }
  EXPECT_GE(min_before_fourth, 3);
  int lo = 1 << 30, hi = 0;
  for (const auto& [_, c] : store.serve_counts()) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  EXPECT_LE(hi - lo, 1);
}

TEST(StoreConcurrency, ParallelFetchesStayBalanced) {
  StudyStore store(":memory:", StoreOptions{3, 5.0, "USD", 3});
  store.add_payload_pairs(make_payload(60));
  store.set_gold_pairs(make_gold(6));
  store.set_sanity_items(make_sanity(3));
  store.set_qualification_test(make_qualification());
  const auto t = *store.qualification_test();
  for (int i = 0; i < 8; ++i) {
    store.record_qualification("w" + std::to_string(i),
                               grade_qualification(t, qualification_answers(t, 10, 3)));
  }
  std::vector<Hit> hits(8);
  std::vector<std::thread> ts;
  for (int i = 0; i < 8; ++i) {
    ts.emplace_back([&, i] { hits[i] = store.assign_hit("w" + std::to_string(i)); });
  }
  for (auto& th : ts) th.join();
  ts.clear();
  // 8 HITs x 15 pages over 60 pairs: every pair served exactly twice.
  for (const auto& [_, c] : store.serve_counts()) EXPECT_EQ(c, 2);
  for (int i = 0; i < 8; ++i) {
    ts.emplace_back([&, i] { store.submit_response(hits[i].hit_id, answer_hit(hits[i], "w" + std::to_string(i))); });
  }
  for (auto& th : ts) th.join();
  const auto ann = store.export_annotations();
  EXPECT_EQ(ann.size(), 120u);
  for (const auto& a : ann) EXPECT_EQ(a.votes.votes.size(), 2u);
}

TEST(Export, VotesBecomeHarnessAnnotations) {
  const auto pairs = make_payload(2);
  std::vector<RecordedVote> v{{pairs[0], Dimension::background, Choice::a},
                              {pairs[0], Dimension::background, Choice::b},
                              {pairs[0], Dimension::foreground, Choice::b},
                              {pairs[1], Dimension::background, Choice::a}};
  const auto ann = votes_to_annotations(v);
  ASSERT_EQ(ann.size(), 3u);
  EXPECT_EQ(ann[0].votes.votes, (std::vector<Choice>{Choice::a, Choice::b}));
  EXPECT_EQ(ann[0].pair.video_a, pairs[0].video_a);
}

}  // namespace
}  // namespace dyneval::study
