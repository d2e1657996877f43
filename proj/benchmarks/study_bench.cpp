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

#include <benchmark/benchmark.h>

#include "dyneval/study.hpp"
#include "study_sim.hpp"

namespace {

using namespace dyneval;

void BM_AssembleHit(benchmark::State& state) {
  const auto payload = testing::make_payload(15);
  const auto gold = testing::make_gold(4);
  const auto sanity = testing::make_sanity(2);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(study::assemble_hit(payload, gold, sanity, ++seed));
}
BENCHMARK(BM_AssembleHit);

void BM_ScoreResponse(benchmark::State& state) {
  const auto hit = study::assemble_hit(testing::make_payload(15), testing::make_gold(4),
                                       testing::make_sanity(2), 1, "h");
  const auto answers = testing::answer_hit(hit, "w");
  for (auto _ : state) benchmark::DoNotOptimize(study::score_response(hit, answers));
}
BENCHMARK(BM_ScoreResponse);

}  // namespace
