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

#include "dyneval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dyneval/error.hpp"
#include "dyneval/hashing.hpp"
#include "dyneval/random.hpp"

namespace dyneval {

using nlohmann::json;

std::string to_string(PairType t) { return t == PairType::inter ? "inter" : "intra"; }
std::string to_string(Dimension d) { return d == Dimension::background ? "background" : "foreground"; }

Dimension parse_dimension(std::string_view s) {
  if (s == "background" || s == "bg") return Dimension::background;
  if (s == "foreground" || s == "fg") return Dimension::foreground;
  throw InvalidInput(fmt::format("unknown dimension '{}'", s));
}

std::pair<std::string, std::string> VideoPair::key() const {
  return video_a < video_b ? std::pair{video_a, video_b} : std::pair{video_b, video_a};
}

int PairSet::count(PairType t) const {
  return static_cast<int>(
      std::count_if(pairs.begin(), pairs.end(), [&](const VideoPair& p) { return p.pair_type == t; }));
}

PairSet build_pairs(const DatasetManifest& manifest, std::uint64_t seed, int generations) {
  if (generations < 1) throw InvalidInput("generations must be >= 1");
  PairSet out;
  for (const auto& prompt : manifest.prompts()) {
    std::vector<std::vector<const VideoRecord*>> cells;
    std::string problem;
    for (const auto& model : manifest.models()) {
      auto g = manifest.generations(model, prompt.id);
      if (static_cast<int>(g.size()) != generations) {
        problem = fmt::format("model '{}' has {} generations, expected {}", model, g.size(),
                              generations);
        break;
      }
      cells.push_back(std::move(g));
    }
    if (!problem.empty()) {
      spdlog::warn("prompt '{}' skipped: {}", prompt.id, problem);
      out.skipped.push_back({prompt.id, problem});
      continue;
    }
    for (const auto& cell : cells) {
      for (std::size_t i = 0; i < cell.size(); ++i) {
        for (std::size_t j = i + 1; j < cell.size(); ++j) {
          out.pairs.push_back({prompt.id, cell[i]->video_id, cell[j]->video_id, PairType::intra});
        }
      }
    }
    Rng rng(mix_seed(seed, stable_hash64(prompt.id)));
    std::vector<std::string> reps;
    for (const auto& cell : cells) reps.push_back(cell[rng.index(cell.size())]->video_id);
    for (std::size_t i = 0; i < reps.size(); ++i) {
      for (std::size_t j = i + 1; j < reps.size(); ++j) {
        out.pairs.push_back({prompt.id, reps[i], reps[j], PairType::inter});
      }
    }
    out.representatives[prompt.id] = std::move(reps);
  }
  return out;
}

Choice HumanVotes::majority() const {
  int a = 0, b = 0;
  for (Choice c : votes) {
    a += c == Choice::a;
    b += c == Choice::b;
  }
  if (a == b) return Choice::tie;
  return a > b ? Choice::a : Choice::b;
}

bool HumanVotes::full_agreement() const {
  if (votes.empty()) return false;
  return std::all_of(votes.begin(), votes.end(), [&](Choice c) { return c == votes.front(); });
}

HumanVotes HumanVotes::swapped() const {
  HumanVotes s;
  for (Choice c : votes) s.votes.push_back(c == Choice::a ? Choice::b : Choice::a);
  return s;
}

std::vector<Annotation> annotations_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInput("annotations must be a JSON array");
  std::vector<Annotation> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& e = j[i];
    try {
      Annotation a;
      a.pair.prompt_id = e.at("pair").at("prompt_id").get<std::string>();
      a.pair.video_a = e.at("pair").at("video_a").get<std::string>();
      a.pair.video_b = e.at("pair").at("video_b").get<std::string>();
      if (a.pair.video_a == a.pair.video_b) throw InvalidInput("pair of identical videos");
      a.dimension = parse_dimension(e.at("dimension").get<std::string>());
      for (const auto& v : e.at("votes")) {
        const auto s = v.get<std::string>();
        if (s == "a") {
          a.votes.votes.push_back(Choice::a);
        } else if (s == "b") {
          a.votes.votes.push_back(Choice::b);
        } else {
          throw InvalidInput("vote must be \"a\" or \"b\"");
        }
      }
      if (a.votes.votes.empty()) throw InvalidInput("no votes");
      out.push_back(std::move(a));
    } catch (const json::exception& ex) {
      throw InvalidInput(fmt::format("annotation {}: {}", i, ex.what()));
    } catch (const InvalidInput& ex) {
      throw InvalidInput(fmt::format("annotation {}: {}", i, ex.what()));
    }
  }
  return out;
}

json annotations_to_json(std::span<const Annotation> annotations) {
  json out = json::array();
  for (const auto& a : annotations) {
    json votes = json::array();
    for (Choice c : a.votes.votes) votes.push_back(c == Choice::a ? "a" : "b");
    out.push_back({{"pair",
                    {{"prompt_id", a.pair.prompt_id},
                     {"video_a", a.pair.video_a},
                     {"video_b", a.pair.video_b}}},
                   {"dimension", to_string(a.dimension)},
                   {"votes", votes}});
  }
  return out;
}

std::vector<Annotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations " + path.string());
  try {
    return annotations_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw InvalidInput(fmt::format("{}: {}", path.string(), e.what()));
  }
}

AnnotationIndex::AnnotationIndex(std::span<const Annotation> annotations) {
  for (const auto& a : annotations) add(a);
}

void AnnotationIndex::add(const Annotation& a) {
  const auto [lo, hi] = a.pair.key();
  const HumanVotes oriented = a.pair.video_a == lo ? a.votes : a.votes.swapped();
  auto& slot = votes_[{a.dimension, a.pair.prompt_id, lo, hi}];
  // Repeated records of one pair pool their votes.
  slot.votes.insert(slot.votes.end(), oriented.votes.begin(), oriented.votes.end());
}

std::optional<HumanVotes> AnnotationIndex::find(const VideoPair& pair, Dimension dim) const {
  const auto [lo, hi] = pair.key();
  const auto it = votes_.find({dim, pair.prompt_id, lo, hi});
  if (it == votes_.end()) return std::nullopt;
  return pair.video_a == lo ? it->second : it->second.swapped();
}

Choice verdict_from_scores(double score_a, double score_b, std::string_view id_a,
                           std::string_view id_b) {
  if (score_a != score_b) return score_a > score_b ? Choice::a : Choice::b;
  return id_a <= id_b ? Choice::a : Choice::b;
}

namespace {

double score_of(const ScoreMap& scores, const std::string& video) {
  const auto it = scores.find(video);
  if (it == scores.end()) throw InvalidInput(fmt::format("no score for video '{}'", video));
  if (!std::isfinite(it->second)) {
    throw InvalidInput(fmt::format("score of video '{}' is not finite", video));
  }
  return it->second;
}

}  // namespace

std::vector<MetricVerdict> verdicts_from_scores(std::span<const VideoPair> pairs,
                                                const ScoreMap& scores) {
  std::vector<MetricVerdict> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const double a = score_of(scores, p.video_a);
    const double b = score_of(scores, p.video_b);
    out.push_back({p, verdict_from_scores(a, b, p.video_a, p.video_b), a, b});
  }
  return out;
}

std::vector<MetricVerdict> verdicts_from_judge(std::span<const VideoPair> pairs,
                                               const ScoreMap& scores, const PairJudge& judge) {
  if (!judge) return verdicts_from_scores(pairs, scores);
  std::vector<MetricVerdict> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const Choice c = judge(p);
    if (c == Choice::tie) throw InvalidInput("a pair judge must pick a side");
    out.push_back({p, c, score_of(scores, p.video_a), score_of(scores, p.video_b)});
  }
  return out;
}

std::optional<std::string> camera_motion_group(std::string_view movement) {
  std::string m(movement);
  std::transform(m.begin(), m.end(), m.begin(), [](unsigned char c) { return std::tolower(c); });
  auto has = [&](const char* w) { return m.find(w) != std::string::npos; };
  if (has("handheld") || has("hand-held")) return "handheld";
  if (has("arc") || has("around") || has("orbit")) return "curved";
  if (has("turn") || has("pedestal") || has("rotat") || has("roll") || has("tilt")) {
    return "rotation";
  }
  if (has("dolly") || has("track") || has("truck") || has("slider") || has("follow") ||
      has("crane") || has("zoom") || has("pan")) {
    return "linear";
  }
  return std::nullopt;
}

EvalContext make_context(const DatasetManifest& manifest,
                         const std::map<std::string, bool>& static_labels) {
  EvalContext ctx;
  ctx.is_static = static_labels;
  for (const auto& p : manifest.prompts()) {
    if (auto tag = camera_movement_tag(p)) ctx.prompt_camera[p.id] = *tag;
  }
  return ctx;
}

std::string PairFilter::name() const {
  switch (kind) {
    case Kind::full_dataset: return "full_dataset";
    case Kind::full_agreement: return "full_agreement";
    case Kind::static_dynamic: return "static-dynamic";
    case Kind::dynamic_dynamic: return "dynamic-dynamic";
    case Kind::static_static: return "static-static";
    case Kind::inter: return "inter";
    case Kind::intra: return "intra";
    case Kind::camera: return "camera:" + tag;
  }
  return "?";
}

namespace {

bool static_label(const EvalContext& ctx, const std::string& video) {
  const auto it = ctx.is_static.find(video);
  if (it == ctx.is_static.end()) {
    throw InvalidInput(fmt::format("no static/dynamic label for video '{}'", video));
  }
  return it->second;
}

}  // namespace

bool PairFilter::matches(const VideoPair& pair, const HumanVotes& votes,
                         const EvalContext& ctx) const {
  switch (kind) {
    case Kind::full_dataset: return true;
    case Kind::full_agreement: return votes.full_agreement();
    case Kind::inter: return pair.pair_type == PairType::inter;
    case Kind::intra: return pair.pair_type == PairType::intra;
    case Kind::static_dynamic:
    case Kind::dynamic_dynamic:
    case Kind::static_static: {
      const int n = static_label(ctx, pair.video_a) + static_label(ctx, pair.video_b);
      return n == (kind == Kind::static_static ? 2 : kind == Kind::static_dynamic ? 1 : 0);
    }
    case Kind::camera: {
      const auto it = ctx.prompt_camera.find(pair.prompt_id);
      if (it == ctx.prompt_camera.end()) return false;
      return it->second == tag || camera_motion_group(it->second) == tag;
    }
  }
  return false;
}

std::vector<PairFilter> parse_filters(std::string_view spec) {
  using K = PairFilter::Kind;
  std::vector<PairFilter> out;
  std::size_t i = 0;
  while (i <= spec.size()) {
    std::size_t j = spec.find(',', i);
    if (j == std::string_view::npos) j = spec.size();
    std::string item(spec.substr(i, j - i));
    i = j + 1;
    if (item.empty()) continue;
    if (item == "full" || item == "full_dataset") {
      out.push_back({K::full_dataset, {}});
    } else if (item == "agreement" || item == "full_agreement") {
      out.push_back({K::full_agreement, {}});
    } else if (item == "static") {
      out.push_back({K::static_dynamic, {}});
      out.push_back({K::dynamic_dynamic, {}});
    } else if (item == "static-dynamic") {
      out.push_back({K::static_dynamic, {}});
    } else if (item == "dynamic-dynamic") {
      out.push_back({K::dynamic_dynamic, {}});
    } else if (item == "static-static") {
      out.push_back({K::static_static, {}});
    } else if (item == "inter") {
      out.push_back({K::inter, {}});
    } else if (item == "intra") {
      out.push_back({K::intra, {}});
    } else if (item.rfind("camera:", 0) == 0 && item.size() > 7) {
      out.push_back({K::camera, item.substr(7)});
    } else {
      throw InvalidInput(fmt::format("unknown filter '{}'", item));
    }
  }
  if (out.empty()) throw InvalidInput("no filter given");
  return out;
}

AccuracyResult pairwise_accuracy(std::span<const MetricVerdict> verdicts,
                                 const AnnotationIndex& votes, Dimension dim,
                                 const PairFilter& filter, const EvalContext& ctx) {
  AccuracyResult r;
  for (const auto& v : verdicts) {
    const auto hv = votes.find(v.pair, dim);
    if (!hv) {
      ++r.unannotated;
      continue;
    }
    if (!filter.matches(v.pair, *hv, ctx)) continue;
    const Choice m = hv->majority();
    if (m == Choice::tie) {
      ++r.ties_excluded;
      continue;
    }
    ++r.total;
    r.correct += v.chosen == m;
  }
  if (r.total == 0) {
    throw InvalidInput(fmt::format("no annotated pairs for filter '{}'", filter.name()));
  }
  r.accuracy = static_cast<double>(r.correct) / r.total;
  return r;
}

RankingTable win_ratios(const std::string& prompt_id, std::span<const std::string> reps,
                        const DatasetManifest& manifest, const AnnotationIndex& votes,
                        Dimension dim, bool agreement_only) {
  RankingTable t;
  t.prompt_id = prompt_id;
  for (const auto& v : reps) t.rows.push_back({v, manifest.video(v).model_id});
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (std::size_t j = i + 1; j < reps.size(); ++j) {
      const auto hv = votes.find({prompt_id, reps[i], reps[j], PairType::inter}, dim);
      if (!hv || (agreement_only && !hv->full_agreement())) {
        t.partial = true;
        continue;
      }
      const Choice m = hv->majority();
      if (m == Choice::tie) {
        t.partial = true;
        continue;
      }
      ++t.rows[i].decided;
      ++t.rows[j].decided;
      ++(m == Choice::a ? t.rows[i] : t.rows[j]).wins;
    }
  }
  for (auto& r : t.rows) r.win_ratio = r.decided > 0 ? double(r.wins) / r.decided : 0.0;
  std::sort(t.rows.begin(), t.rows.end(), [](const RankingRow& a, const RankingRow& b) {
    if (a.win_ratio != b.win_ratio) return a.win_ratio > b.win_ratio;
    return a.video_id < b.video_id;
  });
  for (std::size_t i = 0; i < t.rows.size(); ++i) t.rows[i].rank = static_cast<int>(i) + 1;
  return t;
}

double topk_accuracy(const ScoreMap& scores, std::span<const RankingTable> tables, int k) {
  if (k < 1 || k > 10) throw InvalidInput("k must lie in [1, 10]");
  if (tables.empty()) throw InvalidInput("topk_accuracy: no ranking tables");
  int hits = 0;
  for (const auto& t : tables) {
    if (t.rows.empty()) throw InvalidInput("empty ranking table for " + t.prompt_id);
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& r : t.rows) ranked.push_back({score_of(scores, r.video_id), r.video_id});
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    const std::size_t n = std::min<std::size_t>(k, ranked.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (ranked[i].second == t.best().video_id) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(tables.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("pearson: need two equal series");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw InvalidInput("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

double model_level_plcc(const ScoreMap& scores, std::span<const RankingTable> tables) {
  std::map<std::string, std::pair<double, int>> metric, human;
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      auto& m = metric[r.model_id];
      m.first += score_of(scores, r.video_id);
      ++m.second;
      auto& h = human[r.model_id];
      h.first += r.win_ratio;
      ++h.second;
    }
  }
  if (metric.size() < 3) throw InvalidInput("model_level_plcc needs at least three models");
  std::vector<double> x, y;
  for (const auto& [model, m] : metric) {
    x.push_back(m.first / m.second);
    y.push_back(human[model].first / human[model].second);
  }
  return pearson(x, y);
}

namespace {

template <typename Score, typename Field>
ScoreMap collect(const std::map<std::string, Score>& scores, Field&& f) {
  ScoreMap out;
  for (const auto& [id, s] : scores) out[id] = f(s);
  return out;
}

}  // namespace

std::vector<MetricDef> background_metrics(const std::map<std::string, BackgroundScore>& scores) {
  const auto bg = Dimension::background;
  return {
      {"VB-MS", bg, collect(scores, [](const BackgroundScore& s) { return s.vb_ms; }), {}, {}},
      {"VB-BG", bg, collect(scores, [](const BackgroundScore& s) { return s.vb_bg; }), {}, {}},
      {"MS-Debias-only", bg, collect(scores, [](const BackgroundScore& s) { return s.ms_debias; }),
       {}, {}},
      {"MS-Debias", bg, collect(scores, [](const BackgroundScore& s) { return s.combined; }), {},
       {}},
  };
}

std::vector<MetricDef> foreground_metrics(const std::map<std::string, ForegroundScore>& scores) {
  const auto fg = Dimension::foreground;
  auto shared = std::make_shared<std::map<std::string, ForegroundScore>>(scores);
  auto lookup = [shared](const std::string& id) -> const ForegroundScore& {
    const auto it = shared->find(id);
    if (it == shared->end()) throw InvalidInput(fmt::format("no foreground score for '{}'", id));
    return it->second;
  };
  // Objects present beat objects absent, so the Top-k ordering lifts every
  // video with objects above every video without.
  auto lifted = [](const ForegroundScore& s, double value) {
    return s.objects_found > 0 ? 1.0 + value : s.vb_sc;
  };
  auto tracker_only = [](ForegroundScore s) {
    if (s.objects_found > 0) s.combined = s.tracker_fg;
    return s;
  };
  auto judge_of = [lookup](auto transform) -> PairJudge {
    return [lookup, transform](const VideoPair& p) {
      const auto pref = fg_pair_verdict(transform(lookup(p.video_a)), transform(lookup(p.video_b)),
                                        p.video_a, p.video_b);
      return pref == Preference::a ? Choice::a : Choice::b;
    };
  };
  std::vector<MetricDef> out;
  out.push_back({"VB-SC", fg, collect(scores, [](const ForegroundScore& s) { return s.vb_sc; }),
                 {}, {}});
  out.push_back({"Tracker-FG-only", fg,
                 collect(scores,
                         [&](const ForegroundScore& s) { return tracker_only(s).combined; }),
                 collect(scores,
                         [&](const ForegroundScore& s) {
                           return lifted(s, tracker_only(s).combined);
                         }),
                 judge_of(tracker_only)});
  out.push_back({"Tracker-FG", fg,
                 collect(scores, [](const ForegroundScore& s) { return s.combined; }),
                 collect(scores, [&](const ForegroundScore& s) { return lifted(s, s.combined); }),
                 judge_of([](const ForegroundScore& s) { return s; })});
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

const char* choice_name(Choice c) {
  return c == Choice::a ? "a" : c == Choice::b ? "b" : "tie";
}

}  // namespace

EvaluationReport evaluate(const EvaluationInputs& in) {
  if (!in.manifest || !in.pairs || !in.votes) throw InvalidInput("evaluate: missing inputs");
  EvaluationReport rep;
  rep.accuracy_csv = "dimension,metric,filter,accuracy,correct,total,ties_excluded\n";
  rep.selection_csv = "dimension,metric";
  for (int k : in.top_k) rep.selection_csv += fmt::format(",top{}", k);
  rep.selection_csv += ",plcc_full,plcc_agreement\n";
  rep.rankings_csv = "dimension,table,prompt_id,rank,video_id,model_id,wins,decided,win_ratio\n";
  rep.verdicts_csv =
      "dimension,metric,prompt_id,video_a,video_b,pair_type,score_a,score_b,chosen,majority\n";

  json summary;
  summary["pairs"] = {{"inter", in.pairs->count(PairType::inter)},
                      {"intra", in.pairs->count(PairType::intra)},
                      {"skipped_prompts", in.pairs->skipped.size()}};

  std::set<Dimension> dims;
  for (const auto& m : in.metrics) dims.insert(m.dimension);
  std::map<Dimension, std::vector<RankingTable>> full_tables, agreement_tables;
  for (Dimension d : dims) {
    for (const auto& [prompt, reps] : in.pairs->representatives) {
      full_tables[d].push_back(win_ratios(prompt, reps, *in.manifest, *in.votes, d, false));
      agreement_tables[d].push_back(win_ratios(prompt, reps, *in.manifest, *in.votes, d, true));
    }
    for (const auto* set : {&full_tables[d], &agreement_tables[d]}) {
      const char* name = set == &full_tables[d] ? "full" : "agreement";
      for (const auto& t : *set) {
        for (const auto& r : t.rows) {
          rep.rankings_csv += fmt::format("{},{},{},{},{},{},{},{},{:.6f}\n", to_string(d), name,
                                          csv_field(t.prompt_id), r.rank, csv_field(r.video_id),
                                          csv_field(r.model_id), r.wins, r.decided, r.win_ratio);
        }
      }
    }
    const auto partial = std::count_if(full_tables[d].begin(), full_tables[d].end(),
                                       [](const RankingTable& t) { return t.partial; });
    summary["dimensions"][to_string(d)]["ranking_tables"] = {
        {"count", full_tables[d].size()}, {"partial", partial}};
  }

  for (const auto& metric : in.metrics) {
    const std::string dim = to_string(metric.dimension);
    json& mj = summary["dimensions"][dim]["metrics"][metric.name];
    const auto verdicts = verdicts_from_judge(in.pairs->pairs, metric.scores, metric.judge);
    for (const auto& v : verdicts) {
      const auto hv = in.votes->find(v.pair, metric.dimension);
      rep.verdicts_csv += fmt::format(
          "{},{},{},{},{},{},{:.9g},{:.9g},{},{}\n", dim, csv_field(metric.name),
          csv_field(v.pair.prompt_id), csv_field(v.pair.video_a), csv_field(v.pair.video_b),
          to_string(v.pair.pair_type), v.score_a, v.score_b, choice_name(v.chosen),
          hv ? choice_name(hv->majority()) : "");
    }
    for (const auto& f : in.filters) {
      try {
        const auto r = pairwise_accuracy(verdicts, *in.votes, metric.dimension, f, in.context);
        mj["pairwise_accuracy"][f.name()] = {{"accuracy", r.accuracy},
                                             {"correct", r.correct},
                                             {"total", r.total},
                                             {"ties_excluded", r.ties_excluded},
                                             {"unannotated", r.unannotated}};
        rep.accuracy_csv += fmt::format("{},{},{},{:.6f},{},{},{}\n", dim, csv_field(metric.name),
                                        csv_field(f.name()), r.accuracy, r.correct, r.total,
                                        r.ties_excluded);
      } catch (const InvalidInput& e) {
        mj["pairwise_accuracy"][f.name()] = {{"accuracy", nullptr}, {"note", e.what()}};
        rep.accuracy_csv +=
            fmt::format("{},{},{},,0,0,0\n", dim, csv_field(metric.name), csv_field(f.name()));
      }
    }
    const ScoreMap& rank_scores = metric.rank_scores.empty() ? metric.scores : metric.rank_scores;
    rep.selection_csv += fmt::format("{},{}", dim, csv_field(metric.name));
    const auto& tables = full_tables[metric.dimension];
    for (int k : in.top_k) {
      if (tables.empty()) {
        mj["topk"][fmt::format("top{}", k)] = nullptr;
        rep.selection_csv += ",";
        continue;
      }
      const double acc = topk_accuracy(rank_scores, tables, k);
      mj["topk"][fmt::format("top{}", k)] = acc;
      rep.selection_csv += fmt::format(",{:.6f}", acc);
    }
    for (const auto* set : {&full_tables[metric.dimension], &agreement_tables[metric.dimension]}) {
      const char* name = set == &full_tables[metric.dimension] ? "plcc_full" : "plcc_agreement";
      try {
        const double r = model_level_plcc(metric.scores, *set);
        mj[name] = r;
        rep.selection_csv += fmt::format(",{:.6f}", r);
      } catch (const InvalidInput& e) {
        mj[name] = nullptr;
        mj[std::string(name) + "_note"] = e.what();
        rep.selection_csv += ",";
      }
    }
    rep.selection_csv += "\n";
  }
  rep.summary = std::move(summary);
  return rep;
}

void EvaluationReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    out << text;
  };
  put("report.json", canonical_json_text(summary));
  put("pairwise_accuracy.csv", accuracy_csv);
  put("selection.csv", selection_csv);
  put("rankings.csv", rankings_csv);
  put("verdicts.csv", verdicts_csv);
}

}  // namespace dyneval
