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
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "dyneval/error.hpp"
#include "dyneval/harness.hpp"
#include "fixtures.hpp"
#include "simulate.hpp"

namespace dyneval {
namespace {

using testing::grid_manifest;

TEST(Pairs, MinimalGrid) {
  const auto m = grid_manifest(2, 1, 3);
  const auto set = build_pairs(m, 1);
  EXPECT_EQ(set.count(PairType::intra), 6);
  EXPECT_EQ(set.count(PairType::inter), 1);
  EXPECT_EQ(set.pairs.size(), 7u);
}

TEST(Pairs, FullScaleAndDeterminism) {
  const auto m = grid_manifest(10, 100, 3);
  const auto a = build_pairs(m, 9);
  EXPECT_EQ(a.count(PairType::inter), 4500);
  EXPECT_EQ(a.count(PairType::intra), 3000);
  const auto b = build_pairs(m, 9);
  ASSERT_EQ(a.pairs.size(), b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) EXPECT_EQ(a.pairs[i].key(), b.pairs[i].key());
  std::set<std::pair<std::string, std::string>> unique;
  for (const auto& p : a.pairs) unique.insert(p.key());
  EXPECT_EQ(unique.size(), a.pairs.size());
}

TEST(Pairs, IncompletePromptIsSkipped) {
  auto doc = manifest_to_json(grid_manifest(2, 2, 3));
  auto& vids = doc["videos"];
  vids.erase(vids.begin() + 5);  // model 1, prompt 0, generation 2
  const auto set = build_pairs(manifest_from_json(doc), 1);
  ASSERT_EQ(set.skipped.size(), 1u);
  EXPECT_EQ(set.skipped[0].prompt_id, "p0000");
  EXPECT_EQ(set.pairs.size(), 7u);
}

TEST(Votes, MajorityAgreementAndSwap) {
  HumanVotes v{{Choice::a, Choice::b, Choice::a}};
  EXPECT_EQ(v.majority(), Choice::a);
  EXPECT_FALSE(v.full_agreement());
  EXPECT_EQ(v.swapped().majority(), Choice::b);
  EXPECT_EQ((HumanVotes{{Choice::a, Choice::b}}).majority(), Choice::tie);
  EXPECT_TRUE((HumanVotes{{Choice::b, Choice::b, Choice::b}}).full_agreement());
}

TEST(Verdict, ScoresAndTieRule) {
  EXPECT_EQ(verdict_from_scores(0.8, 0.7, "x", "y"), Choice::a);
  EXPECT_EQ(verdict_from_scores(0.5, 0.5, "v1", "v2"), Choice::a);
  EXPECT_EQ(verdict_from_scores(0.5, 0.5, "v2", "v1"), Choice::b);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> u(0, 3);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng);
    const Choice want = a > b ? Choice::a : a < b ? Choice::b : Choice::a;
    EXPECT_EQ(verdict_from_scores(a, b, "m", "n"), want);
  }
  EXPECT_THROW(verdicts_from_scores(std::vector<VideoPair>{{"p", "a", "b"}}, {{"a", 1.0}}),
               InvalidInput);
}

AnnotationIndex index_of(const std::vector<Annotation>& a) { return AnnotationIndex(a); }

TEST(Accuracy, FourPairFixture) {
  std::vector<VideoPair> pairs{{"p", "a", "b"}, {"p", "a", "c"}, {"p", "b", "c"}, {"p", "c", "d"}};
  std::vector<Annotation> ann;
  for (const auto& p : pairs) ann.push_back({p, Dimension::background, {{Choice::a, Choice::a, Choice::b}}});
  const ScoreMap s{{"a", 4}, {"b", 3}, {"c", 2}, {"d", 5}};
  const auto v = verdicts_from_scores(pairs, s);
  const auto r = pairwise_accuracy(v, index_of(ann), Dimension::background, {});
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_EQ(r.correct, 3);
  EXPECT_EQ(r.total, 4);
}

TEST(Accuracy, CoinFlipsNearHalf) {
  std::mt19937_64 rng(17);
  std::bernoulli_distribution coin(0.5);
  std::vector<VideoPair> pairs;
  std::vector<Annotation> ann;
  std::vector<MetricVerdict> verdicts;
  for (int i = 0; i < 10000; ++i) {
    VideoPair p{"p" + std::to_string(i / 45), "a" + std::to_string(i), "b" + std::to_string(i)};
    ann.push_back({p, Dimension::foreground,
                   {{coin(rng) ? Choice::a : Choice::b, coin(rng) ? Choice::a : Choice::b,
                     coin(rng) ? Choice::a : Choice::b}}});
    verdicts.push_back({p, coin(rng) ? Choice::a : Choice::b, 0, 0});
  }
  const auto r = pairwise_accuracy(verdicts, index_of(ann), Dimension::foreground, {});
  EXPECT_NEAR(r.accuracy, 0.5, 0.02);
  EXPECT_EQ(r.total, 10000);
}

TEST(Accuracy, EvenVoteTiesLeaveTheDenominator) {
  VideoPair p{"p", "a", "b"}, q{"p", "a", "c"};
  std::vector<Annotation> ann{{p, Dimension::background, {{Choice::a, Choice::b}}},
                              {q, Dimension::background, {{Choice::a, Choice::a}}}};
  std::vector<MetricVerdict> v{{p, Choice::a, 0, 0}, {q, Choice::a, 0, 0}};
  const auto r = pairwise_accuracy(v, index_of(ann), Dimension::background, {});
  EXPECT_EQ(r.total, 1);
  EXPECT_EQ(r.ties_excluded, 1);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
}

TEST(Filters, ParsingAndStaticSubsets) {
  const auto f = parse_filters("full,agreement,static,inter,intra,camera:linear");
  ASSERT_EQ(f.size(), 7u);
  EXPECT_EQ(f[2].kind, PairFilter::Kind::static_dynamic);
  EXPECT_EQ(f[3].kind, PairFilter::Kind::dynamic_dynamic);
  EXPECT_EQ(f[6].tag, "linear");
  EXPECT_THROW(parse_filters("bogus"), InvalidInput);

  EvalContext ctx;
  ctx.is_static = {{"s", true}, {"d", false}, {"e", false}};
  const HumanVotes hv{{Choice::a, Choice::a, Choice::a}};
  EXPECT_TRUE(f[2].matches({"p", "s", "d"}, hv, ctx));
  EXPECT_FALSE(f[2].matches({"p", "d", "e"}, hv, ctx));
  EXPECT_TRUE(f[3].matches({"p", "d", "e"}, hv, ctx));
}

TEST(WinRatios, TransitiveTournament) {
  const auto m = grid_manifest(10, 1, 3);
  const auto set = build_pairs(m, 3);
  const auto& reps = set.representatives.at("p0000");
  // Model index defines strength: the lower model index is stronger.
  auto strength = [&](const std::string& v) { return -std::stoi(v.substr(2, v.find('-', 2) - 2)); };
  std::mt19937_64 rng(1);
  std::vector<VideoPair> inter;
  for (const auto& p : set.pairs)
    if (p.pair_type == PairType::inter) inter.push_back(p);
  const auto ann = testing::simulate_votes(inter, rng, [&](const VideoPair& p) {
    return strength(p.video_a) > strength(p.video_b) ? 1.0 : 0.0;
  });
  const auto t = win_ratios("p0000", reps, m, index_of(ann), Dimension::background);
  int sum = 0;
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(t.rows[i].wins, 9 - i);
    EXPECT_EQ(t.rows[i].rank, i + 1);
    EXPECT_EQ(t.rows[i].model_id, fmt::format("model{:02d}", i));
    sum += t.rows[i].wins;
  }
  EXPECT_EQ(sum, 45);
  EXPECT_FALSE(t.partial);
  EXPECT_DOUBLE_EQ(t.best().win_ratio, 1.0);
}

// Brute-force recount straight from the annotation list.
std::map<std::string, int> recount(const std::vector<Annotation>& ann, const std::string& prompt,
                                   Dimension dim) {
  std::map<std::string, int> wins;
  for (const auto& a : ann) {
    if (a.pair.prompt_id != prompt || a.dimension != dim || a.pair.pair_type != PairType::inter) {
      continue;
    }
    int va = 0;
    for (Choice c : a.votes.votes) va += c == Choice::a;
    const int vb = static_cast<int>(a.votes.votes.size()) - va;
    wins[a.pair.video_a] += va > vb;
    wins[a.pair.video_b] += vb > va;
  }
  return wins;
}

TEST(WinRatios, RandomFixturesMatchRecount) {
  const auto m = grid_manifest(10, 100, 3);
  const auto set = build_pairs(m, 5);
  std::vector<VideoPair> inter;
  for (const auto& p : set.pairs)
    if (p.pair_type == PairType::inter) inter.push_back(p.swapped());
  std::mt19937_64 rng(99);
  const auto ann = testing::simulate_votes(inter, rng, [](const VideoPair&) { return 0.5; });
  const AnnotationIndex idx(ann);
  for (const auto& [prompt, reps] : set.representatives) {
    const auto t = win_ratios(prompt, reps, m, idx, Dimension::foreground);
    const auto want = recount(ann, prompt, Dimension::foreground);
    int sum = 0;
    for (const auto& r : t.rows) {
      EXPECT_EQ(r.wins, want.count(r.video_id) ? want.at(r.video_id) : 0);
      EXPECT_NEAR(r.win_ratio, r.wins / 9.0, 1e-12);
      sum += r.wins;
    }
    EXPECT_EQ(sum, 45);
  }
}

// Brute-force Top-k: the best video is selected when fewer than k rows
// outrank it under (score desc, id asc).
double brute_topk(const ScoreMap& s, const std::vector<RankingTable>& tables, int k) {
  int hits = 0;
  for (const auto& t : tables) {
    const auto& best = t.rows.front().video_id;
    int above = 0;
    for (const auto& r : t.rows) {
      if (r.video_id == best) continue;
      const double a = s.at(r.video_id), b = s.at(best);
      above += a > b || (a == b && r.video_id < best);
    }
    hits += above < k;
  }
  return double(hits) / tables.size();
}

double textbook_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = x.size();
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

class RankingFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    manifest = grid_manifest(10, 40, 3);
    set = build_pairs(manifest, 2);
    std::vector<VideoPair> inter;
    for (const auto& p : set.pairs)
      if (p.pair_type == PairType::inter) inter.push_back(p);
    std::mt19937_64 rng(8);
    ann = testing::simulate_votes(inter, rng, [](const VideoPair&) { return 0.5; });
    index = AnnotationIndex(ann);
    tables = testing::all_tables(set, manifest, index, Dimension::background);
  }
  DatasetManifest manifest;
  PairSet set;
  std::vector<Annotation> ann;
  AnnotationIndex index;
  std::vector<RankingTable> tables;
};

TEST_F(RankingFixture, TopKMatchesBruteForce) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 4);  // coarse scores force ties
  for (int trial = 0; trial < 100; ++trial) {
    ScoreMap s;
    for (const auto& v : manifest.videos()) s[v.video_id] = u(rng);
    const int k = 1 + trial % 10;
    EXPECT_NEAR(topk_accuracy(s, tables, k), brute_topk(s, tables, k), 1e-12);
  }
  ScoreMap any;
  for (const auto& v : manifest.videos()) any[v.video_id] = 0;
  EXPECT_DOUBLE_EQ(topk_accuracy(any, tables, 10), 1.0);
  EXPECT_THROW(topk_accuracy(any, tables, 11), InvalidInput);
}

TEST_F(RankingFixture, GroundTruthMetricHasPerfectTop1) {
  ScoreMap s;
  for (const auto& t : tables)
    for (const auto& r : t.rows) s[r.video_id] = r.win_ratio - 1e-6 * r.rank;
  EXPECT_DOUBLE_EQ(topk_accuracy(s, tables, 1), 1.0);
}

TEST_F(RankingFixture, PlccMatchesTextbookAndIsAffineInvariant) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    ScoreMap s;
    for (const auto& v : manifest.videos()) s[v.video_id] = n(rng);
    std::map<std::string, std::pair<double, int>> mx, hy;
    for (const auto& t : tables)
      for (const auto& r : t.rows) {
        mx[r.model_id].first += s[r.video_id];
        mx[r.model_id].second++;
        hy[r.model_id].first += r.win_ratio;
        hy[r.model_id].second++;
      }
    std::vector<double> x, y;
    for (const auto& [model, v] : mx) {
      x.push_back(v.first / v.second);
      y.push_back(hy[model].first / hy[model].second);
    }
    const double r = model_level_plcc(s, tables);
    EXPECT_NEAR(r, textbook_pearson(x, y), 1e-12);
    ScoreMap affine = s;
    for (auto& [_, v] : affine) v = 2.5 * v + 7;
    EXPECT_NEAR(model_level_plcc(affine, tables), r, 1e-12);
  }
}

TEST_F(RankingFixture, PlccOfGroundTruthAndItsNegation) {
  ScoreMap truth, neg;
  for (const auto& t : tables)
    for (const auto& r : t.rows) {
      truth[r.video_id] = 3 * r.win_ratio + 1;
      neg[r.video_id] = -r.win_ratio;
    }
  EXPECT_NEAR(model_level_plcc(truth, tables), 1.0, 1e-12);
  EXPECT_NEAR(model_level_plcc(neg, tables), -1.0, 1e-12);
}

TEST_F(RankingFixture, RandomMetricTop1NearChance) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  ScoreMap s;
  for (const auto& v : manifest.videos()) s[v.video_id] = u(rng);
  const double acc = topk_accuracy(s, tables, 1);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 0.35);
}

TEST_F(RankingFixture, SwappingEveryRecordChangesNothing) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  ScoreMap s;
  for (const auto& v : manifest.videos()) s[v.video_id] = u(rng);
  std::vector<Annotation> swapped;
  for (const auto& a : ann) swapped.push_back({a.pair.swapped(), a.dimension, a.votes.swapped()});
  const AnnotationIndex idx2(swapped);
  std::vector<VideoPair> pairs, rev;
  for (const auto& p : set.pairs) {
    pairs.push_back(p);
    rev.push_back(p.swapped());
  }
  const auto v1 = verdicts_from_scores(pairs, s);
  const auto v2 = verdicts_from_scores(rev, s);
  PairFilter inter{PairFilter::Kind::inter, ""};
  EXPECT_DOUBLE_EQ(pairwise_accuracy(v1, index, Dimension::background, inter).accuracy,
                   pairwise_accuracy(v2, idx2, Dimension::background, inter).accuracy);
  const auto t2 = testing::all_tables(set, manifest, idx2, Dimension::background);
  for (std::size_t i = 0; i < tables.size(); ++i) {
    for (std::size_t r = 0; r < tables[i].rows.size(); ++r) {
      EXPECT_EQ(tables[i].rows[r].video_id, t2[i].rows[r].video_id);
      EXPECT_EQ(tables[i].rows[r].wins, t2[i].rows[r].wins);
    }
  }
  EXPECT_DOUBLE_EQ(model_level_plcc(s, tables), model_level_plcc(s, t2));
}

TEST(Annotations, JsonRoundTrip) {
  std::vector<Annotation> a{{{"p", "x", "y"}, Dimension::foreground, {{Choice::a, Choice::b, Choice::b}}}};
  const auto back = annotations_from_json(nlohmann::json::parse(annotations_to_json(a).dump()));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].pair.video_b, "y");
  EXPECT_EQ(back[0].dimension, Dimension::foreground);
  EXPECT_EQ(back[0].votes.majority(), Choice::b);
}

TEST(CameraGroups, KnownMovements) {
  EXPECT_EQ(camera_motion_group("dolly shot"), "linear");
  EXPECT_FALSE(camera_motion_group("teleport").has_value());
}

}  // namespace
}  // namespace dyneval
