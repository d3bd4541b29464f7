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

#ifndef RANKFORGE_SEARCH_HPP_
#define RANKFORGE_SEARCH_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rankforge/accuracy.hpp"
#include "rankforge/cost.hpp"
#include "rankforge/evaluator.hpp"
#include "rankforge/frontier.hpp"
#include "rankforge/model.hpp"

namespace rankforge {

using Rng = std::mt19937_64;

// Uniform integer in [0, n) from raw engine output. Unlike
// std::uniform_int_distribution the sequence is identical on every standard
// library.
std::uint64_t uniform_below(Rng& rng, std::uint64_t n);

enum class StartPoint { kMaxRank, kHalfCost };
std::string_view to_string(StartPoint start);
StartPoint parse_start_point(std::string_view s);

struct SearchConfig {
  double delta_s = 0.01;  // step interval as a fraction of the max rank
  double delta_m = 0.10;  // minimum rank as a fraction of the max rank
  double delta_r = 0.05;  // initial cost reduction as a fraction of C_max
  std::optional<std::int64_t> sigma;        // cost margin override
  std::optional<std::int64_t> delta_c_min;  // termination granularity override
  std::size_t n_candidates = 200;
  std::uint64_t seed = 0;
  StartPoint start = StartPoint::kMaxRank;
  std::size_t max_iterations = 10'000;
  // Enumerate the whole reduction lattice instead of sampling when it has at
  // most `exhaustive_limit` points and at most `exhaustive_max_layers` layers.
  std::size_t exhaustive_limit = 100'000;
  std::size_t exhaustive_max_layers = 4;
  std::size_t attempt_factor = 50;  // sampling attempts per requested candidate
  // Lower-bound the 2*delta_r*r_max term of the per-layer reduction cap by one
  // step so layers with small ranks can keep moving.
  bool step_floor = true;
  std::size_t workers = 0;  // scoring threads, 0 = hardware concurrency
};

// Per-layer search box. `max_current` shrinks to each accepted rank set.
struct SpaceConstraints {
  RankSet max_init;
  RankSet max_current;
  RankSet min;
  RankSet step;
};

// min_l = ceil(delta_m * max_l), step_l = max(1, floor(delta_s * max_l)).
// Throws Error(kValidation) if some min exceeds its max.
SpaceConstraints make_constraints(const RankSet& max_init, double delta_s,
                                  double delta_m);

// Target reduction for one iteration and the per-layer cap on rank removal.
struct ReductionPlan {
  std::int64_t delta_c = 0;
  std::int64_t sigma = 0;
  double delta_r = 0.05;
  std::int64_t delta_c_min = 1;
  RankSet max_reduction;
};

// floor(min(delta_c / coeff_l, 2 * delta_r * max_current_l,
//           max_current_l - min_l)), clamped at 0.
RankSet max_reduction(const SpaceConstraints& space,
                      std::span<const std::int64_t> coefficients,
                      std::int64_t delta_c, double delta_r, bool step_floor);

struct SearchInit {
  SpaceConstraints space;
  ReductionPlan plan;
  RankSet start;
  std::int64_t c_max = 0;
  std::int64_t delta_c0 = 0;
};

// `max_init` holds the max rank of each optimized layer.
SearchInit init_search(const CostModel& cm, const RankSet& max_init,
                       const SearchConfig& config);
SearchInit init_search(const NetworkModel& model, const CostModel& cm,
                       const SearchConfig& config);

// Uniform scaling of the max ranks (floored, clamped to the minimum ranks)
// whose variable cost is the largest not exceeding `fraction` of the maximum.
RankSet scaled_cost_rank_set(const CostModel& cm, const SpaceConstraints& space,
                             double fraction);

struct SamplingOptions {
  std::size_t exhaustive_limit = 100'000;
  std::size_t exhaustive_max_layers = 4;
  std::size_t attempt_factor = 50;
};

// Candidates R = prev - dR with dR_l a multiple of step_l in
// [0, max_reduction_l], total reduction in [delta_c - sigma, delta_c + sigma]
// and > 0, R >= min, R outside the frontier. Deduplicated, at most
// `n_candidates`, in a deterministic order for a given rng state. An empty
// result means the window could not be hit.
std::vector<RankSet> sample_candidates(const ReductionPlan& plan,
                                       const SpaceConstraints& space,
                                       std::span<const std::int64_t> coefficients,
                                       const RankSet& prev,
                                       const RejectionFrontier& frontier,
                                       std::size_t n_candidates, Rng& rng,
                                       const SamplingOptions& options = {});

struct StepDecision {
  bool accepted = false;
  std::optional<ScoredRankSet> best;
  std::int64_t best_cost = 0;
  std::int64_t next_delta_c = 0;
};

// Best = highest accuracy, then lower cost, then lexicographically smaller.
// Accepts iff best accuracy > tau_a; otherwise halves delta_c.
StepDecision select_step(std::span<const ScoredRankSet> scored, double tau_a,
                         const CostModel& cm, std::int64_t delta_c);

struct IterationRecord {
  std::size_t iteration = 0;
  std::int64_t delta_c = 0;
  std::int64_t sigma = 0;
  std::size_t candidates = 0;
  std::size_t rejected = 0;
  std::optional<double> best_score;
  bool accepted = false;
  RankSet ranks;  // best candidate, or the current set when none was scored
  std::int64_t cost = 0;
};

struct AcceptedSet {
  std::size_t iteration = 0;
  RankSet ranks;
  std::int64_t cost = 0;
  double accuracy = 0.0;
};

struct SearchTrace {
  std::uint64_t seed = 0;
  std::vector<std::string> layer_names;
  std::string target;
  double tau_a = 0.0;
  std::int64_t c_max = 0;
  std::int64_t delta_c0 = 0;
  std::int64_t delta_c_min = 0;
  RankSet start;
  std::int64_t start_cost = 0;
  std::vector<IterationRecord> iterations;

  std::vector<AcceptedSet> accepted() const;
  // Last accepted set, or the start point.
  RankSet final_ranks() const;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

// Stage 1: sample, score, reject, select until a round fails with
// delta_c <= delta_c_min (after halving) or max_iterations is reached.
SearchTrace run_stage1(const CostModel& cm, const RankSet& max_init,
                       double tau_a, Evaluator& evaluator,
                       const SearchConfig& config,
                       const IterationCallback& on_iteration = {});

struct Stage2Check {
  std::size_t iteration = 0;
  RankSet ranks;
  double acc02 = 0.0;
  std::optional<double> acc1;
  bool passed = false;
};

struct Stage2Result {
  RankSet ranks;
  std::optional<std::size_t> iteration;  // empty when the fallback was used
  bool fallback = false;
  std::vector<Stage2Check> checks;
};

// Stage 2: walk accepted sets from last to first; reject a set whose 0.2-epoch
// accuracy is below tau_b (skipping its 1-epoch check) or whose 1-epoch
// accuracy is below tau_c. Returns `fallback` when every set fails.
// Throws Error(kInvalidArgument) when the trace has no accepted set.
Stage2Result run_stage2(const SearchTrace& trace, const AccuracyModel& accuracy,
                        Evaluator& evaluator, const RankSet& fallback);

}  // namespace rankforge

#endif  // RANKFORGE_SEARCH_HPP_
