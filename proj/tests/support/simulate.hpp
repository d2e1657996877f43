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

// Simulated annotation data for harness tests.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "dyneval/harness.hpp"
#include "dyneval/manifest.hpp"

namespace dyneval::testing {

// Three votes per pair and dimension; each vote prefers `a` with probability
// p_a(pair).
template <typename F>
std::vector<Annotation> simulate_votes(const std::vector<VideoPair>& pairs, std::mt19937_64& rng,
                                       F&& p_a, int voters = 3) {
  std::vector<Annotation> out;
  std::uniform_real_distribution<double> u(0, 1);
  for (const auto& pair : pairs) {
    for (Dimension d : {Dimension::background, Dimension::foreground}) {
      Annotation a{pair, d, {}};
      const double p = p_a(pair);
      for (int v = 0; v < voters; ++v) a.votes.votes.push_back(u(rng) < p ? Choice::a : Choice::b);
      out.push_back(std::move(a));
    }
  }
  return out;
}

inline std::vector<RankingTable> all_tables(const PairSet& set, const DatasetManifest& manifest,
                                            const AnnotationIndex& index, Dimension dim) {
  std::vector<RankingTable> tables;
  for (const auto& [prompt, reps] : set.representatives) {
    tables.push_back(win_ratios(prompt, reps, manifest, index, dim));
  }
  return tables;
}

}  // namespace dyneval::testing
