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

// dyneval: command line front end of the toolkit.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dyneval/camera_motion.hpp"
#include "dyneval/error.hpp"
#include "dyneval/harness.hpp"
#include "dyneval/hashing.hpp"
#include "dyneval/manifest.hpp"
#include "dyneval/payload.hpp"
#include "dyneval/prompt_suite.hpp"
#include "dyneval/runner.hpp"
#include "dyneval/study_server.hpp"
#include "dyneval/synthetic_dataset.hpp"
#include "dyneval/video_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dyneval::cli {
namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void emit(const json& doc, const std::string& out) {
  const std::string text = doc.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text(out, text);
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = std::min(s.find(',', start), s.size());
    if (comma > start) out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

struct VideoArgs {
  std::string manifest;
  std::string video_id;
  std::string cache;
  std::string config;
  std::string out;
};

void add_video_args(CLI::App* cmd, VideoArgs& a) {
  cmd->add_option("--manifest", a.manifest, "dataset manifest")->required()->check(CLI::ExistingFile);
  cmd->add_option("--video-id", a.video_id, "video to score")->required();
  cmd->add_option("--cache", a.cache, "stage cache directory");
  cmd->add_option("--config", a.config, "run config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "output file (default stdout)");
}

void write_error_maps(const fs::path& dir, const std::string& video_id, const MsDebiasResult& r) {
  const fs::path root = dir / video_id;
  fs::create_directories(root);
  float peak = 1.0f;
  for (const auto& stack : r.debiased) {
    for (const auto& m : stack.maps) {
      for (float v : m.values.pixels()) peak = std::max(peak, v);
    }
  }
  for (std::size_t l = 0; l < r.debiased.size(); ++l) {
    const auto bytes = payload::encode_error_stack(r.debiased[l]);
    write_text(root / fmt::format("level{}.bin", l), std::string(bytes.begin(), bytes.end()));
    for (const auto& m : r.debiased[l].maps) {
      write_heatmap_png(root / fmt::format("level{}_frame{:03d}.png", l, m.frame_index), m.values,
                        peak);
    }
  }
  spdlog::info("wrote debiased error maps to {}", root.string());
}

int run_bg_score(const VideoArgs& a, const std::string& maps_dir) {
  const DatasetManifest manifest = load_manifest(a.manifest);
  DatasetRunner runner(manifest, config_or_default(a.config), a.cache);
  const VideoRecord& v = manifest.video(a.video_id);
  MsDebiasResult details;
  const BackgroundScore s = runner.background(v, maps_dir.empty() ? nullptr : &details);
  if (!maps_dir.empty()) write_error_maps(maps_dir, v.video_id, details);
  emit(to_json(s), a.out);
  return 0;
}

int run_fg_score(const VideoArgs& a, const std::string& plot) {
  const DatasetManifest manifest = load_manifest(a.manifest);
  const RunConfig cfg = config_or_default(a.config);
  DatasetRunner runner(manifest, cfg, a.cache);
  const VideoRecord& v = manifest.video(a.video_id);
  std::vector<TrackSet> tracks;
  const ForegroundScore s = runner.foreground(v, plot.empty() ? nullptr : &tracks);
  if (!plot.empty()) {
    write_text(plot, track_plot_csv(track_plot_rows(tracks, cfg.foreground)));
    spdlog::info("wrote track plot for {} object(s) to {}", tracks.size(), plot);
  }
  emit(to_json(s), a.out);
  return 0;
}

int run_motion(const std::string& manifest_path, const std::string& cache,
               const std::string& config, double pct, const std::string& out) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  DatasetRunner runner(manifest, config_or_default(config), cache);
  const auto results = runner.camera_motion_all();
  const StaticSplit split = classify_static(results, pct);
  std::string csv = "video_id,c_cam,label\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    csv += fmt::format("{},{:.9g},{}\n", results[i].video_id, results[i].c_cam,
                       split.is_static[i] ? "static" : "dynamic");
  }
  spdlog::info("tau_cam = {:.6g} (p{}){}", split.tau_cam, pct,
               split.degenerate ? ", degenerate: all dynamic" : "");
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    write_text(out, csv);
  }
  return 0;
}

struct PromptArgs {
  std::string lexicon;
  int n = 100;
  std::uint64_t seed = 0;
  std::string out;
  std::string client = "template";
  std::string endpoint;
  std::string model = "gpt-4o";
  std::string api_key_env = "DYNEVAL_LLM_API_KEY";
  double temperature = 0.7;
  int retries = 3;
  int concurrency = 4;
  std::string created_at;
};

int run_prompts(const PromptArgs& a) {
  const Lexicon lex = load_lexicon(a.lexicon);
  std::unique_ptr<LlmClient> client;
  if (a.client == "http") {
    if (a.endpoint.empty()) throw InvalidInput("--client http needs --endpoint");
    HttpLlmConfig hc;
    hc.endpoint = a.endpoint;
    hc.model = a.model;
    hc.api_key_env = a.api_key_env;
    hc.temperature = a.temperature;
    hc.retries = a.retries;
    client = make_http_llm_client(hc);
  } else {
    client = std::make_unique<TemplateLlmClient>();
  }
  SuiteOptions so;
  so.n = a.n;
  so.seed = a.seed;
  so.concurrency = a.concurrency;
  so.render.retries = a.retries;
  so.render.created_at = a.created_at;
  const PromptSuite suite = build_suite(lex, *client, so);
  emit(to_json(suite), a.out);
  spdlog::info("{} prompts rendered with {}", suite.prompts.size(), client->model_id());
  return 0;
}

json pairs_to_json(const PairSet& set) {
  json pairs = json::array();
  for (const auto& p : set.pairs) {
    pairs.push_back({{"prompt_id", p.prompt_id},
                     {"video_a", p.video_a},
                     {"video_b", p.video_b},
                     {"pair_type", to_string(p.pair_type)}});
  }
  json skipped = json::array();
  for (const auto& s : set.skipped) skipped.push_back({{"prompt_id", s.prompt_id}, {"reason", s.reason}});
  return {{"pairs", pairs},
          {"representatives", set.representatives},
          {"skipped", skipped},
          {"counts", {{"inter", set.count(PairType::inter)}, {"intra", set.count(PairType::intra)}}}};
}

struct EvalArgs {
  std::string manifest;
  std::string annotations;
  std::string cache;
  std::string config;
  std::string dims = "bg,fg";
  std::string filters = "full,agreement,static";
  std::string out = "report";
  std::uint64_t seed = 0;
  int generations = 3;
  double static_percentile = 10;
};

int run_evaluate(const EvalArgs& a) {
  const DatasetManifest manifest = load_manifest(a.manifest);
  const auto annotations = load_annotations(a.annotations);
  const AnnotationIndex votes(annotations);
  const PairSet pairs = build_pairs(manifest, a.seed, a.generations);
  for (const auto& s : pairs.skipped) spdlog::warn("prompt {} skipped: {}", s.prompt_id, s.reason);

  DatasetRunner runner(manifest, config_or_default(a.config), a.cache);
  EvaluationInputs in;
  in.manifest = &manifest;
  in.pairs = &pairs;
  in.votes = &votes;
  in.filters = parse_filters(a.filters);

  bool need_motion = false;
  for (const auto& f : in.filters) {
    need_motion |= f.kind == PairFilter::Kind::static_dynamic ||
                   f.kind == PairFilter::Kind::dynamic_dynamic ||
                   f.kind == PairFilter::Kind::static_static;
  }
  std::map<std::string, bool> labels;
  if (need_motion) {
    const auto motion = runner.camera_motion_all();
    const StaticSplit split = classify_static(motion, a.static_percentile);
    for (std::size_t i = 0; i < motion.size(); ++i) labels[motion[i].video_id] = split.is_static[i];
  }
  in.context = make_context(manifest, labels);

  for (const auto& token : split_list(a.dims)) {
    const Dimension d = parse_dimension(token);
    auto defs = d == Dimension::background ? background_metrics(runner.background_all())
                                           : foreground_metrics(runner.foreground_all());
    for (auto& m : defs) in.metrics.push_back(std::move(m));
  }
  const EvaluationReport report = evaluate(in);
  report.write(a.out);
  std::cout << report.accuracy_csv;
  spdlog::info("report written to {}", a.out);
  return 0;
}

struct ServeArgs {
  std::string db = "study.sqlite";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token_env = "DYNEVAL_ADMIN_TOKEN";
  std::string video_dir;
  std::string static_dir;
  std::string pool;
  std::string ui_config;
  int target_votes = 3;
  double compensation = 5.0;
  std::uint64_t seed = 0;
};

study::StudyServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

int run_serve(const ServeArgs& a) {
  study::StoreOptions so;
  so.target_votes = a.target_votes;
  so.compensation_per_hit = a.compensation;
  so.seed = a.seed;
  study::StudyStore store(a.db, so);
  if (!a.pool.empty()) {
    spdlog::info("pool loaded: {}", study::apply_pool(store, read_json(a.pool)).dump());
  }
  study::ServerOptions opts;
  if (const char* t = std::getenv(a.token_env.c_str())) opts.admin_token = t;
  if (opts.admin_token.empty()) spdlog::warn("${} is unset; admin routes are disabled", a.token_env);
  opts.video_dir = a.video_dir;
  opts.static_dir = a.static_dir;
  if (!a.ui_config.empty()) opts.ui_config = read_json(a.ui_config);
  study::StudyServer server(store, opts);
  const int port = server.bind(a.host, a.port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("study server listening on http://{}:{}", a.host, port);
  server.listen();
  g_server = nullptr;
  return 0;
}

// Payload pool from the harness pairs of a manifest.
int run_study_pool(const std::string& manifest_path, std::uint64_t seed, int generations,
                   const std::string& out) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const PairSet pairs = build_pairs(manifest, seed, generations);
  json payload = json::array();
  for (const auto& p : pairs.pairs) {
    const auto [lo, hi] = p.key();
    study::StudyPair sp{"sp" + sha256_hex(p.prompt_id + "/" + lo + "/" + hi).substr(0, 12),
                        p.prompt_id, p.video_a, p.video_b};
    payload.push_back(study::to_json(sp));
  }
  emit({{"payload", payload}}, out);
  return 0;
}

int run_study_export(const std::string& db, const std::string& out) {
  study::StudyStore store(db);
  emit(annotations_to_json(store.export_annotations()), out);
  return 0;
}

struct SynthArgs {
  std::string out;
  synthetic::DatasetOptions options;
  bool warm = true;
};

int run_synth(const SynthArgs& a) {
  const fs::path dir = a.out;
  const auto ds = synthetic::plan_dataset(a.options);
  synthetic::write_dataset(ds, dir);
  if (a.warm) {
    const RunConfig cfg = synthetic::warm_oracle_cache(ds, dir / "cache");
    write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
  }
  spdlog::info("{} videos, {} pairs, {} annotations in {}", ds.manifest.videos().size(),
               ds.pairs.pairs.size(), ds.annotations.size(), dir.string());
  return 0;
}

}  // namespace
}  // namespace dyneval::cli

int main(int argc, char** argv) {
  using namespace dyneval::cli;
  CLI::App app{"dyneval: background and foreground consistency metrics for generated video"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  // bg / fg score
  VideoArgs bg_args, fg_args;
  std::string maps_dir, track_plot;
  auto* bg = app.add_subcommand("bg", "background consistency");
  bg->require_subcommand(1);
  auto* bg_score = bg->add_subcommand("score", "score one video");
  add_video_args(bg_score, bg_args);
  bg_score->add_option("--emit-error-maps", maps_dir, "write debiased error maps (.bin + PNG)");
  auto* fg = app.add_subcommand("fg", "foreground consistency");
  fg->require_subcommand(1);
  auto* fg_score = fg->add_subcommand("score", "score one video");
  add_video_args(fg_score, fg_args);
  fg_score->add_option("--emit-track-plot", track_plot, "write per-object deviation series CSV");

  // motion
  std::string m_manifest, m_cache, m_config, m_out;
  double m_pct = 10;
  auto* motion = app.add_subcommand("motion", "camera motion and static/dynamic labels");
  motion->add_option("--manifest", m_manifest)->required()->check(CLI::ExistingFile);
  motion->add_option("--cache", m_cache);
  motion->add_option("--config", m_config)->check(CLI::ExistingFile);
  motion->add_option("--percentile", m_pct, "static threshold percentile")->check(CLI::Range(0.0, 100.0));
  motion->add_option("--out", m_out, "CSV file (default stdout)");

  // prompts build
  PromptArgs pa;
  auto* prompts = app.add_subcommand("prompts", "procedural prompt suite");
  prompts->require_subcommand(1);
  auto* pbuild = prompts->add_subcommand("build", "sample metadata and render prompts");
  pbuild->add_option("--lexicon", pa.lexicon)->required()->check(CLI::ExistingFile);
  pbuild->add_option("--n", pa.n)->check(CLI::PositiveNumber);
  pbuild->add_option("--seed", pa.seed);
  pbuild->add_option("--out", pa.out, "suite.json (default stdout)");
  pbuild->add_option("--client", pa.client, "template (offline) or http")
      ->check(CLI::IsMember({"template", "http"}));
  pbuild->add_option("--endpoint", pa.endpoint, "chat-completions URL");
  pbuild->add_option("--model", pa.model);
  pbuild->add_option("--api-key-env", pa.api_key_env);
  pbuild->add_option("--temperature", pa.temperature);
  pbuild->add_option("--retries", pa.retries)->check(CLI::NonNegativeNumber);
  pbuild->add_option("--concurrency", pa.concurrency)->check(CLI::PositiveNumber);
  pbuild->add_option("--created-at", pa.created_at, "fixed timestamp for reproducible output");

  // pairs
  std::string pr_manifest, pr_out;
  std::uint64_t pr_seed = 0;
  int pr_gens = 3;
  auto* pairs = app.add_subcommand("pairs", "build the inter/intra pair list");
  pairs->add_option("--manifest", pr_manifest)->required()->check(CLI::ExistingFile);
  pairs->add_option("--seed", pr_seed);
  pairs->add_option("--generations", pr_gens)->check(CLI::PositiveNumber);
  pairs->add_option("--out", pr_out);

  // evaluate
  EvalArgs ea;
  auto* ev = app.add_subcommand("evaluate", "pairwise accuracy, Top-k and PLCC report");
  ev->add_option("--manifest", ea.manifest)->required()->check(CLI::ExistingFile);
  ev->add_option("--annotations", ea.annotations)->required()->check(CLI::ExistingFile);
  ev->add_option("--cache", ea.cache);
  ev->add_option("--config", ea.config)->check(CLI::ExistingFile);
  ev->add_option("--dims", ea.dims, "bg,fg");
  ev->add_option("--filters", ea.filters, "full,agreement,static,inter,intra,camera:<group>");
  ev->add_option("--out", ea.out, "report directory");
  ev->add_option("--seed", ea.seed, "representative sampling seed");
  ev->add_option("--generations", ea.generations)->check(CLI::PositiveNumber);
  ev->add_option("--static-percentile", ea.static_percentile)->check(CLI::Range(0.0, 100.0));

  // study
  ServeArgs sa;
  std::string sp_manifest, sp_out, se_db = "study.sqlite", se_out;
  std::uint64_t sp_seed = 0;
  int sp_gens = 3;
  auto* study = app.add_subcommand("study", "annotation study service");
  study->require_subcommand(1);
  auto* serve = study->add_subcommand("serve", "run the HTTP API");
  serve->add_option("--db", sa.db, "SQLite file");
  serve->add_option("--host", sa.host);
  serve->add_option("--port", sa.port)->check(CLI::Range(0, 65535));
  serve->add_option("--admin-token-env", sa.token_env, "variable holding the admin bearer token");
  serve->add_option("--video-dir", sa.video_dir)->check(CLI::ExistingDirectory);
  serve->add_option("--static-dir", sa.static_dir, "UI bundle")->check(CLI::ExistingDirectory);
  serve->add_option("--pool", sa.pool, "pool JSON loaded at startup")->check(CLI::ExistingFile);
  serve->add_option("--ui-config", sa.ui_config)->check(CLI::ExistingFile);
  serve->add_option("--target-votes", sa.target_votes)->check(CLI::PositiveNumber);
  serve->add_option("--compensation", sa.compensation);
  serve->add_option("--seed", sa.seed);
  auto* spool = study->add_subcommand("pool", "payload pool JSON from a manifest");
  spool->add_option("--manifest", sp_manifest)->required()->check(CLI::ExistingFile);
  spool->add_option("--seed", sp_seed);
  spool->add_option("--generations", sp_gens)->check(CLI::PositiveNumber);
  spool->add_option("--out", sp_out);
  auto* sexport = study->add_subcommand("export", "accepted votes as harness annotations");
  sexport->add_option("--db", se_db)->check(CLI::ExistingFile);
  sexport->add_option("--out", se_out);

  // synth
  SynthArgs ya;
  bool no_warm = false;
  auto& yo = ya.options;
  auto* synth = app.add_subcommand("synth", "write a synthetic benchmark with an oracle cache");
  synth->add_option("--out", ya.out)->required();
  synth->add_option("--models", yo.models)->check(CLI::PositiveNumber);
  synth->add_option("--prompts", yo.prompts)->check(CLI::PositiveNumber);
  synth->add_option("--generations", yo.generations)->check(CLI::PositiveNumber);
  synth->add_option("--seed", yo.seed);
  synth->add_option("--width", yo.width)->check(CLI::Range(16, 4096));
  synth->add_option("--height", yo.height)->check(CLI::Range(16, 4096));
  synth->add_option("--frames", yo.frames)->check(CLI::Range(3, 4096));
  synth->add_option("--static-fraction", yo.static_fraction)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--annotators", yo.annotators)->check(CLI::PositiveNumber);
  synth->add_flag("--no-cache", no_warm, "skip the oracle cache and config.json");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("dyneval"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (bg_score->parsed()) return run_bg_score(bg_args, maps_dir);
    if (fg_score->parsed()) return run_fg_score(fg_args, track_plot);
    if (motion->parsed()) return run_motion(m_manifest, m_cache, m_config, m_pct, m_out);
    if (pbuild->parsed()) return run_prompts(pa);
    if (pairs->parsed()) {
      emit(pairs_to_json(dyneval::build_pairs(dyneval::load_manifest(pr_manifest), pr_seed, pr_gens)),
           pr_out);
      return 0;
    }
    if (ev->parsed()) return run_evaluate(ea);
    if (serve->parsed()) return run_serve(sa);
    if (spool->parsed()) return run_study_pool(sp_manifest, sp_seed, sp_gens, sp_out);
    if (sexport->parsed()) return run_study_export(se_db, se_out);
    if (synth->parsed()) {
      ya.warm = !no_warm;
      return run_synth(ya);
    }
  } catch (const dyneval::InvalidInput& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
