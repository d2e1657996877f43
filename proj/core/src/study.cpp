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

#include "dyneval/study.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "dyneval/error.hpp"
#include "dyneval/hashing.hpp"
#include "dyneval/random.hpp"

namespace dyneval::study {

using nlohmann::json;

namespace {

std::string short_hash(const std::string& s) { return sha256_hex(s).substr(0, 12); }

const char* dimension_question(Dimension d) {
  return d == Dimension::background
             ? "Which video shows more distortion in the background scene (morphing, "
               "stretching, flicker)?"
             : "Which video shows more distortion of the foreground objects (shape changes, "
               "merging, splitting)?";
}

// Served answer (index of the more distorted video in served order) to the
// preferred video in canonical orientation.
Choice preferred_from_served(int distorted, bool swapped) {
  const int canonical_distorted = swapped ? 1 - distorted : distorted;
  return canonical_distorted == 0 ? Choice::b : Choice::a;
}

std::vector<Dimension> shuffled_dimensions(Rng& rng) {
  std::vector<Dimension> d(std::begin(kDimensions), std::end(kDimensions));
  rng.shuffle(d);
  return d;
}

std::vector<int> pick_distinct(Rng& rng, int n, int k) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + static_cast<int>(rng.index(n - i))]);
  }
  idx.resize(k);
  return idx;
}

std::vector<Mcq> opaque_mcqs(const std::vector<Mcq>& in, const std::string& salt) {
  std::vector<Mcq> out = in;
  for (auto& q : out) q.question_id = "q" + short_hash(salt + "/" + q.question_id);
  return out;
}

int choice_index(const json& v) {
  if (v.is_number_integer()) {
    const int i = v.get<int>();
    if (i == 0 || i == 1) return i;
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "left" || s == "a" || s == "first") return 0;
    if (s == "right" || s == "b" || s == "second") return 1;
  }
  throw InvalidInput("choice must be left/right (or a/b, 0/1)");
}

std::string role_name(PageRole r) {
  switch (r) {
    case PageRole::payload: return "payload";
    case PageRole::repeat: return "repeat";
    case PageRole::gold: return "gold";
    case PageRole::sanity: return "sanity";
  }
  return "payload";
}

PageRole parse_role(const std::string& s) {
  if (s == "payload") return PageRole::payload;
  if (s == "repeat") return PageRole::repeat;
  if (s == "gold") return PageRole::gold;
  if (s == "sanity") return PageRole::sanity;
  throw InvalidInput("unknown page role '" + s + "'");
}

json choice_map_to_json(const std::map<Dimension, Choice>& m) {
  json j = json::object();
  for (const auto& [d, c] : m) j[to_string(d)] = c == Choice::a ? "a" : "b";
  return j;
}

std::map<Dimension, Choice> choice_map_from_json(const json& j) {
  std::map<Dimension, Choice> m;
  for (const auto& [k, v] : j.items()) {
    const auto s = v.get<std::string>();
    if (s != "a" && s != "b") throw InvalidInput("gold answer must be \"a\" or \"b\"");
    m[parse_dimension(k)] = s == "a" ? Choice::a : Choice::b;
  }
  return m;
}

}  // namespace

int Hit::reliability_question_count() const {
  int n = 0;
  for (const auto& p : pages) {
    switch (p.role) {
      case PageRole::payload: break;
      case PageRole::repeat: n += static_cast<int>(p.question_order.size()); break;
      case PageRole::gold: n += static_cast<int>(p.gold_key.size() + p.mcqs.size()); break;
      case PageRole::sanity: n += static_cast<int>(p.mcqs.size()); break;
    }
  }
  return n;
}

Hit assemble_hit(std::span<const StudyPair> payload, std::span<const GoldPair> gold,
                 std::span<const SanityItem> sanity, std::uint64_t seed,
                 const std::string& hit_id) {
  if (static_cast<int>(payload.size()) != kPayloadPages) {
    throw InvalidInput(fmt::format("a HIT needs {} payload pairs, got {}", kPayloadPages,
                                   payload.size()));
  }
  if (static_cast<int>(gold.size()) < kGoldPages) throw InvalidInput("gold pool exhausted");
  if (static_cast<int>(sanity.size()) < kSanityPages) throw InvalidInput("sanity pool exhausted");
  std::set<std::string> ids;
  for (const auto& p : payload) {
    if (!ids.insert(p.pair_id).second) throw InvalidInput("duplicate payload pair " + p.pair_id);
  }

  Rng rng(seed);
  Hit hit;
  hit.seed = seed;
  hit.hit_id = hit_id.empty() ? "hit-" + short_hash(fmt::format("{}", seed)) : hit_id;

  std::vector<Page> pages;
  for (int i = 0; i < kPayloadPages; ++i) {
    Page p;
    p.role = PageRole::payload;
    p.pair = payload[i];
    p.swapped = rng.coin();
    p.question_order = shuffled_dimensions(rng);
    p.payload_index = i;
    pages.push_back(std::move(p));
  }
  for (int i : pick_distinct(rng, kPayloadPages, kRepeatPages)) {
    Page r = pages[i];
    r.role = PageRole::repeat;
    r.swapped = !r.swapped;
    std::reverse(r.question_order.begin(), r.question_order.end());
    pages.push_back(std::move(r));
  }
  for (int g : pick_distinct(rng, static_cast<int>(gold.size()), kGoldPages)) {
    Page p;
    p.role = PageRole::gold;
    p.pair = gold[g].pair;
    p.swapped = rng.coin();
    p.question_order = shuffled_dimensions(rng);
    p.gold_index = g;
    p.gold_key = gold[g].preferred;
    p.mcqs = gold[g].mcqs;
    pages.push_back(std::move(p));
  }
  {
    const auto& s = sanity[rng.index(sanity.size())];
    Page p;
    p.role = PageRole::sanity;
    p.pair = s.pair;
    p.swapped = rng.coin();
    p.question_order = shuffled_dimensions(rng);
    p.mcqs = s.mcqs;
    pages.push_back(std::move(p));
  }

  // Seeded interleaving, then make every repeat follow its original.
  rng.shuffle(pages);
  for (std::size_t i = 0; i < pages.size(); ++i) {
    if (pages[i].role != PageRole::repeat) continue;
    for (std::size_t j = i + 1; j < pages.size(); ++j) {
      if (pages[j].role == PageRole::payload && pages[j].payload_index == pages[i].payload_index) {
        std::swap(pages[i], pages[j]);
        break;
      }
    }
  }
  for (std::size_t i = 0; i < pages.size(); ++i) {
    pages[i].page_id = "pg" + short_hash(fmt::format("{}/{}", hit.hit_id, i));
    pages[i].mcqs = opaque_mcqs(pages[i].mcqs, pages[i].page_id);
  }
  hit.pages = std::move(pages);

  const int rq = hit.reliability_question_count();
  if (rq < kMinReliabilityQuestions || rq > kMaxReliabilityQuestions) {
    throw InvalidInput(fmt::format("HIT carries {} reliability questions, expected {}..{}", rq,
                                   kMinReliabilityQuestions, kMaxReliabilityQuestions));
  }
  return hit;
}

json serve_page(const Page& page, int index, int total, const std::string& base) {
  const std::string& first = page.swapped ? page.pair.video_b : page.pair.video_a;
  const std::string& second = page.swapped ? page.pair.video_a : page.pair.video_b;
  json questions = json::array();
  for (Dimension d : page.question_order) {
    questions.push_back({{"question_id", to_string(d)},
                         {"kind", "choice"},
                         {"text", dimension_question(d)},
                         {"options", {"left", "right"}}});
  }
  for (const auto& q : page.mcqs) {
    questions.push_back({{"question_id", q.question_id},
                         {"kind", "mcq"},
                         {"text", q.text},
                         {"options", q.options}});
  }
  return {{"page_id", page.page_id},
          {"index", index + 1},
          {"total", total},
          {"videos", {base + first, base + second}},
          {"questions", questions}};
}

json serve_hit(const Hit& hit, const std::string& base) {
  json pages = json::array();
  for (std::size_t i = 0; i < hit.pages.size(); ++i) {
    pages.push_back(serve_page(hit.pages[i], static_cast<int>(i),
                               static_cast<int>(hit.pages.size()), base));
  }
  return {{"hit_id", hit.hit_id}, {"pages", pages}};
}

json to_json(const StudyPair& p) {
  return {{"pair_id", p.pair_id},
          {"prompt_id", p.prompt_id},
          {"video_a", p.video_a},
          {"video_b", p.video_b}};
}

StudyPair study_pair_from_json(const json& j) {
  try {
    StudyPair p;
    p.prompt_id = j.at("prompt_id").get<std::string>();
    p.video_a = j.at("video_a").get<std::string>();
    p.video_b = j.at("video_b").get<std::string>();
    p.pair_id = j.value("pair_id", p.prompt_id + "/" + p.video_a + "/" + p.video_b);
    if (p.video_a == p.video_b) throw InvalidInput("pair of identical videos");
    return p;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("study pair: ") + e.what());
  }
}

json to_json(const Mcq& q, bool with_answer) {
  json j = {{"question_id", q.question_id}, {"text", q.text}, {"options", q.options}};
  if (with_answer) j["answer"] = q.answer;
  return j;
}

Mcq mcq_from_json(const json& j) {
  try {
    Mcq q;
    q.question_id = j.at("question_id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    q.options = j.at("options").get<std::vector<std::string>>();
    q.answer = j.at("answer").get<int>();
    if (q.options.size() < 2) throw InvalidInput("an MCQ needs at least two options");
    if (q.answer < 0 || q.answer >= static_cast<int>(q.options.size())) {
      throw InvalidInput("MCQ answer key out of range for " + q.question_id);
    }
    return q;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("mcq: ") + e.what());
  }
}

json to_json(const GoldPair& g) {
  json mcqs = json::array();
  for (const auto& q : g.mcqs) mcqs.push_back(to_json(q));
  return {{"pair", to_json(g.pair)}, {"preferred", choice_map_to_json(g.preferred)},
          {"mcqs", mcqs}};
}

GoldPair gold_pair_from_json(const json& j) {
  try {
    GoldPair g;
    g.pair = study_pair_from_json(j.at("pair"));
    g.preferred = choice_map_from_json(j.at("preferred"));
    if (g.preferred.empty()) throw InvalidInput("gold pair without an answer key");
    for (const auto& q : j.value("mcqs", json::array())) g.mcqs.push_back(mcq_from_json(q));
    return g;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("gold pair: ") + e.what());
  }
}

json to_json(const SanityItem& s) {
  json mcqs = json::array();
  for (const auto& q : s.mcqs) mcqs.push_back(to_json(q));
  return {{"pair", to_json(s.pair)}, {"mcqs", mcqs}};
}

SanityItem sanity_item_from_json(const json& j) {
  try {
    SanityItem s;
    s.pair = study_pair_from_json(j.at("pair"));
    for (const auto& q : j.at("mcqs")) s.mcqs.push_back(mcq_from_json(q));
    if (s.mcqs.empty()) throw InvalidInput("sanity item without questions");
    return s;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("sanity item: ") + e.what());
  }
}

json to_json(const Hit& hit) {
  json pages = json::array();
  for (const auto& p : hit.pages) {
    json order = json::array();
    for (Dimension d : p.question_order) order.push_back(to_string(d));
    json mcqs = json::array();
    for (const auto& q : p.mcqs) mcqs.push_back(to_json(q));
    pages.push_back({{"page_id", p.page_id},
                     {"role", role_name(p.role)},
                     {"pair", to_json(p.pair)},
                     {"swapped", p.swapped},
                     {"question_order", order},
                     {"mcqs", mcqs},
                     {"payload_index", p.payload_index},
                     {"gold_index", p.gold_index},
                     {"gold_key", choice_map_to_json(p.gold_key)}});
  }
  return {{"hit_id", hit.hit_id}, {"seed", hit.seed}, {"pages", pages}};
}

Hit hit_from_json(const json& j) {
  try {
    Hit h;
    h.hit_id = j.at("hit_id").get<std::string>();
    h.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& pj : j.at("pages")) {
      Page p;
      p.page_id = pj.at("page_id").get<std::string>();
      p.role = parse_role(pj.at("role").get<std::string>());
      p.pair = study_pair_from_json(pj.at("pair"));
      p.swapped = pj.at("swapped").get<bool>();
      for (const auto& d : pj.at("question_order")) {
        p.question_order.push_back(parse_dimension(d.get<std::string>()));
      }
      for (const auto& q : pj.at("mcqs")) p.mcqs.push_back(mcq_from_json(q));
      p.payload_index = pj.at("payload_index").get<int>();
      p.gold_index = pj.at("gold_index").get<int>();
      p.gold_key = choice_map_from_json(pj.at("gold_key"));
      h.pages.push_back(std::move(p));
    }
    return h;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("hit record: ") + e.what());
  }
}

ResponseSubmission submission_from_json(const json& j) {
  try {
    ResponseSubmission s;
    s.worker_id = j.at("worker_id").get<std::string>();
    for (const auto& pj : j.at("answers")) {
      PageAnswer a;
      a.page_id = pj.at("page_id").get<std::string>();
      const json choices = pj.value("choices", json::object());
      const json mcq = pj.value("mcq", json::object());
      for (const auto& [k, v] : choices.items()) {
        a.distorted[parse_dimension(k)] = choice_index(v);
      }
      for (const auto& [k, v] : mcq.items()) a.mcq[k] = v.get<int>();
      s.pages.push_back(std::move(a));
    }
    return s;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("response: ") + e.what());
  }
}

json to_json(const ResponseSubmission& s) {
  json answers = json::array();
  for (const auto& a : s.pages) {
    json choices = json::object();
    for (const auto& [d, v] : a.distorted) choices[to_string(d)] = v == 0 ? "left" : "right";
    answers.push_back({{"page_id", a.page_id}, {"choices", choices}, {"mcq", a.mcq}});
  }
  return {{"worker_id", s.worker_id}, {"answers", answers}};
}

json to_json(const HitResponse& r) {
  return {{"hit_id", r.hit_id},
          {"worker_id", r.worker_id},
          {"reliability_correct", r.reliability_correct},
          {"reliability_total", r.reliability_total},
          {"reliability_score", r.reliability_score},
          {"accepted", r.accepted},
          {"votes", r.votes.size()}};
}

HitResponse score_response(const Hit& hit, const ResponseSubmission& response) {
  std::map<std::string, const PageAnswer*> by_page;
  for (const auto& a : response.pages) {
    if (!by_page.emplace(a.page_id, &a).second) {
      throw InvalidInput("page answered twice: " + a.page_id);
    }
  }
  if (by_page.size() != hit.pages.size()) {
    throw InvalidInput(fmt::format("{} of {} pages answered", by_page.size(), hit.pages.size()));
  }
  // Validate everything before scoring anything.
  std::vector<std::map<Dimension, Choice>> preferred(hit.pages.size());
  for (std::size_t i = 0; i < hit.pages.size(); ++i) {
    const Page& p = hit.pages[i];
    const auto it = by_page.find(p.page_id);
    if (it == by_page.end()) throw InvalidInput("unanswered page " + p.page_id);
    const PageAnswer& a = *it->second;
    if (a.distorted.size() != p.question_order.size()) {
      throw InvalidInput("unanswered or unknown question on page " + p.page_id);
    }
    for (Dimension d : p.question_order) {
      const auto c = a.distorted.find(d);
      if (c == a.distorted.end()) throw InvalidInput("unanswered question on page " + p.page_id);
      if (c->second != 0 && c->second != 1) throw InvalidInput("choice out of range");
      preferred[i][d] = preferred_from_served(c->second, p.swapped);
    }
    if (a.mcq.size() != p.mcqs.size()) {
      throw InvalidInput("unanswered or unknown MCQ on page " + p.page_id);
    }
    for (const auto& q : p.mcqs) {
      const auto m = a.mcq.find(q.question_id);
      if (m == a.mcq.end()) throw InvalidInput("unanswered MCQ on page " + p.page_id);
      if (m->second < 0 || m->second >= static_cast<int>(q.options.size())) {
        throw InvalidInput("MCQ option out of range on page " + p.page_id);
      }
    }
  }

  HitResponse r;
  r.hit_id = hit.hit_id;
  r.worker_id = response.worker_id;
  std::map<int, std::size_t> original_page;
  for (std::size_t i = 0; i < hit.pages.size(); ++i) {
    if (hit.pages[i].role == PageRole::payload) original_page[hit.pages[i].payload_index] = i;
  }
  auto tally = [&](bool ok) {
    ++r.reliability_total;
    r.reliability_correct += ok;
  };
  for (std::size_t i = 0; i < hit.pages.size(); ++i) {
    const Page& p = hit.pages[i];
    const PageAnswer& a = *by_page.at(p.page_id);
    switch (p.role) {
      case PageRole::payload: break;
      case PageRole::repeat: {
        const auto& orig = preferred[original_page.at(p.payload_index)];
        for (Dimension d : p.question_order) tally(preferred[i].at(d) == orig.at(d));
        break;
      }
      case PageRole::gold:
        for (const auto& [d, key] : p.gold_key) tally(preferred[i].at(d) == key);
        [[fallthrough]];
      case PageRole::sanity:
        for (const auto& q : p.mcqs) tally(a.mcq.at(q.question_id) == q.answer);
        break;
    }
  }
  r.reliability_score =
      r.reliability_total > 0 ? double(r.reliability_correct) / r.reliability_total : 0.0;
  r.accepted = r.reliability_score >= kAcceptThreshold;
  if (r.accepted) {
    for (std::size_t i = 0; i < hit.pages.size(); ++i) {
      const Page& p = hit.pages[i];
      if (p.role != PageRole::payload) continue;
      for (Dimension d : kDimensions) {
        if (const auto c = preferred[i].find(d); c != preferred[i].end()) {
          r.votes.push_back({p.pair, d, c->second});
        }
      }
    }
  }
  return r;
}

void QualificationTest::validate() const {
  if (static_cast<int>(mcqs.size()) != kQualificationMcqs) {
    throw InvalidInput(fmt::format("qualification needs {} MCQs", kQualificationMcqs));
  }
  if (static_cast<int>(gold.size()) != kQualificationGold) {
    throw InvalidInput(fmt::format("qualification needs {} gold pairs", kQualificationGold));
  }
  for (const auto& g : gold) {
    if (g.preferred.empty()) throw InvalidInput("qualification gold pair without a key");
  }
}

json serve_qualification(const QualificationTest& t, const std::string& base) {
  json mcqs = json::array(), gold = json::array();
  for (const auto& q : t.mcqs) mcqs.push_back(to_json(q, false));
  for (const auto& g : t.gold) {
    const Dimension d = g.preferred.begin()->first;
    gold.push_back({{"pair_id", g.pair.pair_id},
                    {"videos", {base + g.pair.video_a, base + g.pair.video_b}},
                    {"question", {{"question_id", to_string(d)},
                                  {"kind", "choice"},
                                  {"text", dimension_question(d)},
                                  {"options", {"left", "right"}}}}});
  }
  return {{"mcqs", mcqs}, {"gold", gold}};
}

QualificationAnswers qualification_answers_from_json(const json& j) {
  try {
    QualificationAnswers a;
    const json mcq = j.value("mcq", json::object());
    const json gold = j.value("gold", json::object());
    for (const auto& [k, v] : mcq.items()) a.mcq[k] = v.get<int>();
    for (const auto& [k, v] : gold.items()) {
      a.gold_distorted[k] = choice_index(v);
    }
    return a;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("qualification answers: ") + e.what());
  }
}

QualificationTest qualification_test_from_json(const json& j) {
  try {
    QualificationTest t;
    for (const auto& q : j.at("mcqs")) t.mcqs.push_back(mcq_from_json(q));
    for (const auto& g : j.at("gold")) t.gold.push_back(gold_pair_from_json(g));
    t.validate();
    return t;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("qualification test: ") + e.what());
  }
}

json to_json(const QualificationTest& t) {
  json mcqs = json::array(), gold = json::array();
  for (const auto& q : t.mcqs) mcqs.push_back(to_json(q));
  for (const auto& g : t.gold) gold.push_back(to_json(g));
  return {{"mcqs", mcqs}, {"gold", gold}};
}

json to_json(const Qualification& q) {
  return {{"mcq_score", q.mcq_score}, {"gold_correct", q.gold_correct}, {"passed", q.passed}};
}

Qualification grade_qualification(const QualificationTest& test, const QualificationAnswers& a) {
  test.validate();
  Qualification q;
  for (const auto& m : test.mcqs) {
    const auto it = a.mcq.find(m.question_id);
    if (it == a.mcq.end()) throw InvalidInput("unanswered qualification MCQ " + m.question_id);
    q.mcq_score += it->second == m.answer;
  }
  for (const auto& g : test.gold) {
    const auto it = a.gold_distorted.find(g.pair.pair_id);
    if (it == a.gold_distorted.end()) {
      throw InvalidInput("unanswered qualification pair " + g.pair.pair_id);
    }
    const auto& [dim, key] = *g.preferred.begin();
    (void)dim;
    q.gold_correct += preferred_from_served(it->second, false) == key;
  }
  q.passed = q.mcq_score > 8 && q.gold_correct == kQualificationGold;
  return q;
}

std::vector<Annotation> votes_to_annotations(std::span<const RecordedVote> votes) {
  std::vector<Annotation> out;
  std::map<std::pair<std::string, Dimension>, std::size_t> slot;
  for (const auto& v : votes) {
    const auto key = std::pair{v.pair.pair_id, v.dimension};
    auto it = slot.find(key);
    if (it == slot.end()) {
      Annotation a;
      a.pair = {v.pair.prompt_id, v.pair.video_a, v.pair.video_b, PairType::inter};
      a.dimension = v.dimension;
      it = slot.emplace(key, out.size()).first;
      out.push_back(std::move(a));
    }
    out[it->second].votes.votes.push_back(v.preferred);
  }
  return out;
}

}  // namespace dyneval::study
