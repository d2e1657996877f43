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

// Pools and simulated raters for the annotation study.

#include <string>
#include <vector>

#include <fmt/format.h>

#include "dyneval/study.hpp"

namespace dyneval::testing {

inline study::Mcq make_mcq(const std::string& id, int answer = 1) {
  return {id, "What colour is the car?", {"red", "blue", "green"}, answer};
}

inline std::vector<study::StudyPair> make_payload(int n, const std::string& prefix = "pp") {
  std::vector<study::StudyPair> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({fmt::format("{}{:03d}", prefix, i), fmt::format("p{:04d}", i / 45),
                   fmt::format("{}-a{}", prefix, i), fmt::format("{}-b{}", prefix, i)});
  }
  return out;
}

inline std::vector<study::GoldPair> make_gold(int n) {
  std::vector<study::GoldPair> out;
  for (int i = 0; i < n; ++i) {
    study::GoldPair g;
    g.pair = {fmt::format("gold{:02d}", i), "pg", fmt::format("g-a{}", i), fmt::format("g-b{}", i)};
    g.preferred[Dimension::background] = i % 2 ? Choice::a : Choice::b;
    g.preferred[Dimension::foreground] = i % 3 ? Choice::b : Choice::a;
    g.mcqs.push_back(make_mcq(fmt::format("gq{}", i), i % 3));
    out.push_back(g);
  }
  return out;
}

inline std::vector<study::SanityItem> make_sanity(int n) {
  std::vector<study::SanityItem> out;
  for (int i = 0; i < n; ++i) {
    study::SanityItem s;
    s.pair = {fmt::format("san{:02d}", i), "ps", fmt::format("s-a{}", i), fmt::format("s-b{}", i)};
    s.mcqs = {make_mcq(fmt::format("sq{}a", i), 0), make_mcq(fmt::format("sq{}b", i), 2)};
    out.push_back(s);
  }
  return out;
}

inline study::QualificationTest make_qualification() {
  study::QualificationTest t;
  for (int i = 0; i < study::kQualificationMcqs; ++i) {
    t.mcqs.push_back(make_mcq(fmt::format("qm{}", i), i % 3));
  }
  for (int i = 0; i < study::kQualificationGold; ++i) {
    study::GoldPair g;
    g.pair = {fmt::format("qg{}", i), "pq", fmt::format("q-a{}", i), fmt::format("q-b{}", i)};
    g.preferred[Dimension::background] = i % 2 ? Choice::a : Choice::b;
    t.gold.push_back(g);
  }
  return t;
}

// Which served video is MORE distorted, given the preferred one in
// canonical orientation.
inline int distorted_index(Choice preferred, bool swapped) {
  return ((preferred == Choice::a) != swapped) ? 1 : 0;
}

inline study::QualificationAnswers qualification_answers(const study::QualificationTest& t,
                                                         int mcq_right, int gold_right) {
  study::QualificationAnswers a;
  for (int i = 0; i < static_cast<int>(t.mcqs.size()); ++i) {
    const auto& q = t.mcqs[i];
    a.mcq[q.question_id] = i < mcq_right ? q.answer : (q.answer + 1) % 3;
  }
  for (int i = 0; i < static_cast<int>(t.gold.size()); ++i) {
    const auto& g = t.gold[i];
    const int right = distorted_index(g.preferred.begin()->second, false);
    a.gold_distorted[g.pair.pair_id] = i < gold_right ? right : 1 - right;
  }
  return a;
}

// A rater who prefers video_a on every payload pair, stays consistent on
// repeats and gets gold and sanity right, except that the first `wrong`
// reliability questions (in page order) are answered wrongly.
inline study::ResponseSubmission answer_hit(const study::Hit& hit, const std::string& worker,
                                            int wrong = 0) {
  study::ResponseSubmission s;
  s.worker_id = worker;
  int budget = wrong;
  auto spoil = [&](int right, int options) {
    if (budget <= 0) return right;
    --budget;
    return (right + 1) % options;
  };
  for (const auto& p : hit.pages) {
    study::PageAnswer a;
    a.page_id = p.page_id;
    for (Dimension d : p.question_order) {
      Choice pref = Choice::a;
      if (p.role == study::PageRole::gold) pref = p.gold_key.at(d);
      const int right = distorted_index(pref, p.swapped);
      // Dimension answers on sanity pages are not scored.
      const bool scored = p.role == study::PageRole::gold || p.role == study::PageRole::repeat;
      a.distorted[d] = scored ? spoil(right, 2) : right;
    }
    for (const auto& q : p.mcqs) {
      a.mcq[q.question_id] = spoil(q.answer, static_cast<int>(q.options.size()));
    }
    s.pages.push_back(std::move(a));
  }
  return s;
}

}  // namespace dyneval::testing
