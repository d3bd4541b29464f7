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

#include "rankforge/baselines.hpp"

#include <algorithm>
#include <utility>

#include "rankforge/error.hpp"

namespace rankforge {

BaselineResult layerwise_greedy(const CostModel& cm,
                                const SpaceConstraints& space,
                                Evaluator& evaluator, double tau_a,
                                std::size_t workers) {
  BaselineResult result;
  RankSet current = space.max_current;
  const double start_accuracy = evaluator.evaluate(current, Stage::kScore0);
  result.evaluator_calls = 1;
  if (!(start_accuracy > tau_a)) return result;
  result.ranks = current;
  result.accuracy = start_accuracy;
  result.cost = cm.cost(current);

  for (;;) {
    std::vector<RankSet> moves;
    for (std::size_t l = 0; l < current.size(); ++l) {
      if (current[l] - space.step[l] < space.min[l]) continue;
      RankSet next = current;
      next[l] -= space.step[l];
      moves.push_back(std::move(next));
    }
    if (moves.empty()) break;
    const auto scored = score_candidates(evaluator, moves, Stage::kScore0, workers);
    result.evaluator_calls += scored.size();
    const auto decision = select_step(scored, tau_a, cm, 0);
    if (!decision.accepted) break;
    current = decision.best->ranks;
    result.ranks = current;
    result.accuracy = decision.best->accuracy;
    result.cost = decision.best_cost;
    ++result.iterations;
  }
  return result;
}

BaselineResult brute_force(const CostModel& cm, const RankSet& lower,
                           const RankSet& upper, Evaluator& evaluator,
                           double tau_a, const BruteForceOptions& options) {
  if (lower.size() != upper.size() || lower.size() != cm.size()) {
    throw Error(ErrorKind::kInvalidArgument, "lattice bounds are misaligned");
  }
  RankSet step = options.step;
  if (step.size() == 0) step.values.assign(lower.size(), 1);
  if (step.size() != lower.size()) {
    throw Error(ErrorKind::kInvalidArgument, "lattice steps are misaligned");
  }
  // Lowest reachable point on each axis.
  RankSet floor = upper;
  double points = 1.0;
  for (std::size_t l = 0; l < lower.size(); ++l) {
    if (upper[l] < lower[l]) {
      throw Error(ErrorKind::kInvalidArgument, "empty lattice");
    }
    if (step[l] < 1) throw Error(ErrorKind::kInvalidArgument, "lattice step must be positive");
    const Rank levels = (upper[l] - lower[l]) / step[l] + 1;
    floor.values[l] = upper[l] - (levels - 1) * step[l];
    points *= static_cast<double>(levels);
  }
  if (points > static_cast<double>(options.limit)) {
    throw Error(ErrorKind::kInvalidArgument,
                "lattice of " + std::to_string(static_cast<std::uint64_t>(points)) +
                    " points exceeds the limit of " + std::to_string(options.limit));
  }

  // Visit points in increasing cost so the scan can stop at the first cost
  // level that holds a feasible set.
  std::vector<std::pair<std::int64_t, RankSet>> lattice;
  lattice.reserve(static_cast<std::size_t>(points));
  RankSet r = floor;
  for (;;) {
    lattice.emplace_back(cm.cost(r), r);
    std::size_t l = 0;
    while (l < r.size() && r[l] == upper[l]) r[l] = floor[l], ++l;
    if (l == r.size()) break;
    r[l] += step[l];
  }
  std::sort(lattice.begin(), lattice.end());

  BaselineResult result;
  constexpr std::size_t kBatch = 1024;
  std::size_t pos = 0;
  while (pos < lattice.size()) {
    if (result.found() && lattice[pos].first > result.cost) break;
    std::size_t end = std::min(lattice.size(), pos + kBatch);
    if (result.found()) {
      while (end > pos && lattice[end - 1].first > result.cost) --end;
    }
    std::vector<RankSet> batch;
    for (std::size_t i = pos; i < end; ++i) batch.push_back(lattice[i].second);
    const auto scored =
        score_candidates(evaluator, batch, Stage::kScore0, options.workers);
    result.evaluator_calls += scored.size();
    for (std::size_t i = 0; i < scored.size(); ++i) {
      if (!(scored[i].accuracy > tau_a)) continue;
      const auto c = lattice[pos + i].first;
      const bool better =
          !result.found() || c < result.cost ||
          (c == result.cost &&
           (scored[i].accuracy > result.accuracy ||
            (scored[i].accuracy == result.accuracy && scored[i].ranks < *result.ranks)));
      if (better) {
        result.ranks = scored[i].ranks;
        result.cost = c;
        result.accuracy = scored[i].accuracy;
      }
    }
    pos = end;
  }
  result.iterations = 1;
  return result;
}

}  // namespace rankforge
