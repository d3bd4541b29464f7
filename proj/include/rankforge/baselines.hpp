// Copyright 2026 The RankForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RANKFORGE_BASELINES_HPP_
#define RANKFORGE_BASELINES_HPP_

#include <cstdint>
#include <optional>

#include "rankforge/cost.hpp"
#include "rankforge/evaluator.hpp"
#include "rankforge/search.hpp"

namespace rankforge {

struct BaselineResult {
  std::optional<RankSet> ranks;  // empty when no feasible set exists
  std::int64_t cost = 0;
  double accuracy = 0.0;
  std::size_t iterations = 0;
  std::uint64_t evaluator_calls = 0;

  bool found() const { return ranks.has_value(); }
};

// Layer-wise greedy: starting from max_init, each iteration lowers exactly one
// layer by its step, picking the reduction with the highest accuracy. Stops
// when every single-layer reduction scores <= tau_a or would cross min.
BaselineResult layerwise_greedy(const CostModel& cm,
                                const SpaceConstraints& space,
                                Evaluator& evaluator, double tau_a,
                                std::size_t workers = 0);

struct BruteForceOptions {
  std::uint64_t limit = 1'000'000;
  std::size_t workers = 0;
  RankSet step;  // per-layer spacing down from upper; empty means 1
};

// Exhaustive scan of the lattice upper - k*step, clipped at lower. Returns the feasible
// set (accuracy > tau_a) of minimum cost; ties go to higher accuracy, then the
// lexicographically smaller set. Throws Error(kInvalidArgument) when the
// lattice exceeds options.limit.
BaselineResult brute_force(const CostModel& cm, const RankSet& lower,
                           const RankSet& upper, Evaluator& evaluator,
                           double tau_a, const BruteForceOptions& options = {});

}  // namespace rankforge

#endif  // RANKFORGE_BASELINES_HPP_
