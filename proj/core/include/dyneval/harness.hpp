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

// Benchmark harness: pair construction, human-vote bookkeeping, metric
// verdicts and the reported statistics (pairwise accuracy, win-ratio
// rankings, Top-k selection accuracy, model-level PLCC).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyneval/background.hpp"
#include "dyneval/foreground.hpp"
#include "dyneval/manifest.hpp"

namespace dyneval {

enum class PairType { inter, intra };
enum class Dimension { background, foreground };
enum class Choice { a, b, tie };

std::string to_string(PairType t);
std::string to_string(Dimension d);
Dimension parse_dimension(std::string_view s);

struct VideoPair {
  std::string prompt_id;
  std::string video_a;
  std::string video_b;
  PairType pair_type = PairType::inter;

  // Unordered identity: (a, b) and (b, a) are the same pair.
  std::pair<std::string, std::string> key() const;
  VideoPair swapped() const { return {prompt_id, video_b, video_a, pair_type}; }
};

struct SkippedPrompt {
  std::string prompt_id;
  std::string reason;
};

struct PairSet {
  std::vector<VideoPair> pairs;
  // prompt -> one representative video per model, in manifest model order
  std::map<std::string, std::vector<std::string>> representatives;
  std::vector<SkippedPrompt> skipped;

  int count(PairType t) const;
};

// Per prompt: every within-model pair of the generations of each model, and
// every pair among one seeded random representative per model. A prompt
// where some model does not have exactly `generations` videos is skipped.
PairSet build_pairs(const DatasetManifest& manifest, std::uint64_t seed, int generations = 3);

struct HumanVotes {
  std::vector<Choice> votes;  // a or b only

  Choice majority() const;
  bool full_agreement() const;
  HumanVotes swapped() const;
};

struct Annotation {
  VideoPair pair;
  Dimension dimension = Dimension::background;
  HumanVotes votes;
};

// [{pair: {prompt_id, video_a, video_b}, dimension, votes: ["a", "b", ...]}]
std::vector<Annotation> annotations_from_json(const nlohmann::json& j);
nlohmann::json annotations_to_json(std::span<const Annotation> annotations);
std::vector<Annotation> load_annotations(const std::filesystem::path& path);

// Votes keyed by (dimension, prompt, unordered pair); lookups re-orient the
// votes to the orientation of the queried pair.
class AnnotationIndex {
 public:
  AnnotationIndex() = default;
  explicit AnnotationIndex(std::span<const Annotation> annotations);

  void add(const Annotation& a);
  std::optional<HumanVotes> find(const VideoPair& pair, Dimension dim) const;
  std::size_t size() const { return votes_.size(); }

 private:
  std::map<std::tuple<Dimension, std::string, std::string, std::string>, HumanVotes> votes_;
};

// Higher score wins; an exact tie goes to the lexicographically smaller id.
Choice verdict_from_scores(double score_a, double score_b, std::string_view id_a,
                           std::string_view id_b);

struct MetricVerdict {
  VideoPair pair;
  Choice chosen = Choice::a;
  double score_a = 0;
  double score_b = 0;
};

using ScoreMap = std::map<std::string, double>;
using PairJudge = std::function<Choice(const VideoPair&)>;

// Verdicts by raw score comparison. Throws InvalidInput on a missing or
// non-finite score.
std::vector<MetricVerdict> verdicts_from_scores(std::span<const VideoPair> pairs,
                                                const ScoreMap& scores);
// Verdicts from a custom judge; score_a/score_b are taken from `scores`.
std::vector<MetricVerdict> verdicts_from_judge(std::span<const VideoPair> pairs,
                                               const ScoreMap& scores, const PairJudge& judge);

// Camera-motion group of a movement phrase (linear, curved, handheld,
// rotation) or nullopt.
std::optional<std::string> camera_motion_group(std::string_view movement);

struct EvalContext {
  std::map<std::string, bool> is_static;           // video -> static label
  std::map<std::string, std::string> prompt_camera;  // prompt -> camera movement
};

EvalContext make_context(const DatasetManifest& manifest,
                         const std::map<std::string, bool>& static_labels = {});

struct PairFilter {
  enum class Kind {
    full_dataset,
    full_agreement,
    static_dynamic,
    dynamic_dynamic,
    static_static,
    inter,
    intra,
    camera,
  };
  Kind kind = Kind::full_dataset;
  std::string tag;  // camera movement or motion group for Kind::camera

  std::string name() const;
  bool matches(const VideoPair& pair, const HumanVotes& votes, const EvalContext& ctx) const;
};

// Accepts the canonical names, the short CLI forms (full, agreement,
// static, inter, intra) and camera:<group-or-movement>. "static" expands to
// the static-dynamic and dynamic-dynamic subsets.
std::vector<PairFilter> parse_filters(std::string_view spec);

struct AccuracyResult {
  double accuracy = 0;
  int correct = 0;
  int total = 0;          // denominator: filtered pairs with a non-tie majority
  int ties_excluded = 0;
  int unannotated = 0;
};

// Fraction of filtered, annotated, non-tie pairs where the verdict equals the
// human majority. Throws InvalidInput when the filtered set is empty.
AccuracyResult pairwise_accuracy(std::span<const MetricVerdict> verdicts,
                                 const AnnotationIndex& votes, Dimension dim,
                                 const PairFilter& filter, const EvalContext& ctx = {});

struct RankingRow {
  std::string video_id;
  std::string model_id;
  int wins = 0;
  int decided = 0;  // comparisons with a majority
  double win_ratio = 0;
  int rank = 0;     // 1-based
};

struct RankingTable {
  std::string prompt_id;
  std::vector<RankingRow> rows;  // ranked: descending win ratio, then video id
  bool partial = false;          // some pair had no usable majority

  const RankingRow& best() const { return rows.front(); }
};

// Win counts over all pairs among the prompt's representatives. The win
// ratio is wins over decided comparisons (wins / 9 when complete). With
// `agreement_only`, only unanimous pairs count as decided.
RankingTable win_ratios(const std::string& prompt_id, std::span<const std::string> representatives,
                        const DatasetManifest& manifest, const AnnotationIndex& votes,
                        Dimension dim, bool agreement_only = false);

// Fraction of tables whose best video is among the k highest-scored of its
// rows (score ties to the smaller id). k must lie in [1, 10].
double topk_accuracy(const ScoreMap& scores, std::span<const RankingTable> tables, int k);

// Pearson correlation of per-model mean metric score against per-model mean
// win ratio, both over the table rows. Needs >= 3 models.
double model_level_plcc(const ScoreMap& scores, std::span<const RankingTable> tables);

double pearson(std::span<const double> x, std::span<const double> y);

// Per-video scalars and pair judges for every reported metric.
struct MetricDef {
  std::string name;
  Dimension dimension;
  ScoreMap scores;        // per-video value for PLCC and the verdict table
  ScoreMap rank_scores;   // ordering used for Top-k; empty: `scores`
  PairJudge judge;        // null: raw comparison of `scores`
};

std::vector<MetricDef> background_metrics(const std::map<std::string, BackgroundScore>& scores);
std::vector<MetricDef> foreground_metrics(const std::map<std::string, ForegroundScore>& scores);

struct EvaluationInputs {
  const DatasetManifest* manifest = nullptr;
  const PairSet* pairs = nullptr;
  const AnnotationIndex* votes = nullptr;
  EvalContext context;
  std::vector<MetricDef> metrics;
  std::vector<PairFilter> filters;
  std::vector<int> top_k{1, 2, 3, 4, 5};
};

struct EvaluationReport {
  nlohmann::json summary;
  std::string accuracy_csv;   // dimension,metric,filter,accuracy,correct,total,ties_excluded
  std::string selection_csv;  // dimension,metric,top1..,plcc_full,plcc_agreement
  std::string rankings_csv;   // dimension,prompt_id,rank,video_id,model_id,wins,decided,win_ratio
  std::string verdicts_csv;   // dimension,metric,prompt_id,video_a,video_b,pair_type,chosen,...

  void write(const std::filesystem::path& dir) const;
};

EvaluationReport evaluate(const EvaluationInputs& in);

}  // namespace dyneval
