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

// Annotation-study domain logic: HIT assembly with embedded reliability
// checks, qualification grading, response scoring and vote export. Storage
// and HTTP live in study_store.hpp and study_server.hpp.
//
// Raters are asked which video is MORE distorted on a dimension. Every
// choice stored here (gold keys, recorded votes, exported annotations) is
// the preferred, i.e. less distorted, video; served answers are converted
// on the way in.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyneval/harness.hpp"

namespace dyneval::study {

inline constexpr int kPayloadPages = 15;
inline constexpr int kRepeatPages = 2;
inline constexpr int kGoldPages = 2;
inline constexpr int kSanityPages = 1;
inline constexpr int kHitPages = kPayloadPages + kRepeatPages + kGoldPages + kSanityPages;
inline constexpr int kMinReliabilityQuestions = 12;
inline constexpr int kMaxReliabilityQuestions = 14;
inline constexpr double kAcceptThreshold = 0.8;
inline constexpr int kQualificationMcqs = 10;
inline constexpr int kQualificationGold = 3;

inline constexpr Dimension kDimensions[] = {Dimension::background, Dimension::foreground};

struct StudyPair {
  std::string pair_id;
  std::string prompt_id;
  std::string video_a;
  std::string video_b;
};

struct Mcq {
  std::string question_id;
  std::string text;
  std::vector<std::string> options;
  int answer = 0;  // index into options
};

struct GoldPair {
  StudyPair pair;
  std::map<Dimension, Choice> preferred;  // known answer per dimension
  std::vector<Mcq> mcqs;                  // optional content questions
};

struct SanityItem {
  StudyPair pair;
  std::vector<Mcq> mcqs;
};

enum class PageRole { payload, repeat, gold, sanity };

struct Page {
  std::string page_id;  // opaque
  PageRole role = PageRole::payload;
  StudyPair pair;
  bool swapped = false;                 // served as (video_b, video_a)
  std::vector<Dimension> question_order;
  std::vector<Mcq> mcqs;
  int payload_index = -1;               // payload and repeat pages
  int gold_index = -1;
  std::map<Dimension, Choice> gold_key;  // gold pages, canonical orientation
};

struct Hit {
  std::string hit_id;
  std::uint64_t seed = 0;
  std::vector<Page> pages;

  int reliability_question_count() const;
};

// Builds one HIT from exactly 15 payload pairs, >= 2 gold pairs and >= 1
// sanity item. Deterministic per seed. Throws InvalidInput on short pools
// or a reliability question count outside [12, 14].
Hit assemble_hit(std::span<const StudyPair> payload, std::span<const GoldPair> gold,
                 std::span<const SanityItem> sanity, std::uint64_t seed,
                 const std::string& hit_id = {});

// Wire format of a served page. Carries no field revealing the page role.
nlohmann::json serve_page(const Page& page, int index, int total,
                          const std::string& video_base_url = "/videos/");
nlohmann::json serve_hit(const Hit& hit, const std::string& video_base_url = "/videos/");

nlohmann::json to_json(const Hit& hit);  // full internal record
Hit hit_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StudyPair& p);
StudyPair study_pair_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Mcq& q, bool with_answer = true);
Mcq mcq_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GoldPair& g);
GoldPair gold_pair_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SanityItem& s);
SanityItem sanity_item_from_json(const nlohmann::json& j);

// Served answers of one page: dimension answers name the MORE distorted
// video in served order ("left" / "right", or "a" / "b"); MCQ answers are
// option indices.
struct PageAnswer {
  std::string page_id;
  std::map<Dimension, int> distorted;  // 0 = first served video, 1 = second
  std::map<std::string, int> mcq;
};

struct ResponseSubmission {
  std::string worker_id;
  std::vector<PageAnswer> pages;
};

ResponseSubmission submission_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ResponseSubmission& s);

struct RecordedVote {
  StudyPair pair;
  Dimension dimension = Dimension::background;
  Choice preferred = Choice::a;  // canonical orientation
};

struct HitResponse {
  std::string hit_id;
  std::string worker_id;
  int reliability_correct = 0;
  int reliability_total = 0;
  double reliability_score = 0;
  bool accepted = false;
  std::vector<RecordedVote> votes;  // payload pages only; empty when rejected
};

nlohmann::json to_json(const HitResponse& r);

// Throws InvalidInput (reject without scoring) when a page or question is
// unanswered or unknown.
HitResponse score_response(const Hit& hit, const ResponseSubmission& response);

struct QualificationTest {
  std::vector<Mcq> mcqs;        // 10
  std::vector<GoldPair> gold;   // 3; the first dimension with a key is asked
  void validate() const;
};

struct QualificationAnswers {
  std::map<std::string, int> mcq;             // question_id -> option
  std::map<std::string, int> gold_distorted;  // pair_id -> 0/1 in served order
};

struct Qualification {
  int mcq_score = 0;
  int gold_correct = 0;
  bool passed = false;
};

nlohmann::json serve_qualification(const QualificationTest& t,
                                   const std::string& video_base_url = "/videos/");
QualificationAnswers qualification_answers_from_json(const nlohmann::json& j);
QualificationTest qualification_test_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QualificationTest& t);
nlohmann::json to_json(const Qualification& q);

// Passed iff mcq_score > 8 and all three gold pairs are right. Throws
// InvalidInput on an incomplete submission.
Qualification grade_qualification(const QualificationTest& test, const QualificationAnswers& a);

// Harness annotation records from recorded votes: one entry per pair and
// dimension, votes in recording order.
std::vector<Annotation> votes_to_annotations(std::span<const RecordedVote> votes);

}  // namespace dyneval::study
