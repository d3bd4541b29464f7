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

#include "rankforge/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "rankforge/error.hpp"

namespace rankforge {
namespace {

// Guards floor/ceil of products like 0.1 * 70 = 7.000000000000001.
constexpr double kRoundingSlack = 1e-9;

Rank floor_scaled(double factor, Rank value) {
  return static_cast<Rank>(std::floor(factor * static_cast<double>(value) +
                                      kRoundingSlack));
}

Rank ceil_scaled(double factor, Rank value) {
  return static_cast<Rank>(std::ceil(factor * static_cast<double>(value) -
                                     kRoundingSlack));
}

std::int64_t reduction_cost(std::span<const std::int64_t> coefficients,
                            const RankSet& step, const std::vector<Rank>& levels) {
  std::int64_t sum = 0;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    sum += coefficients[l] * step[l] * levels[l];
  }
  return sum;
}

// Moves single layers by one step towards the [lo, hi] window, each time
// taking the move that leaves the reduction closest to `target`. Returns
// false when no move improves the gap.
bool repair(std::vector<Rank>& levels, const std::vector<Rank>& max_levels,
            const std::vector<std::int64_t>& unit, std::int64_t target,
            std::int64_t lo, std::int64_t hi) {
  std::int64_t cost = 0;
  for (std::size_t l = 0; l < levels.size(); ++l) cost += unit[l] * levels[l];
  while (cost < lo || cost > hi) {
    const std::int64_t gap = std::llabs(cost - target);
    std::int64_t best_gap = gap;
    std::size_t best_layer = levels.size();
    std::int64_t best_cost = cost;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      std::int64_t next;
      if (cost > hi) {
        if (levels[l] == 0) continue;
        next = cost - unit[l];
      } else {
        if (levels[l] >= max_levels[l]) continue;
        next = cost + unit[l];
      }
      const std::int64_t g = std::llabs(next - target);
      if (g < best_gap) {
        best_gap = g;
        best_layer = l;
        best_cost = next;
      }
    }
    if (best_layer == levels.size()) return false;
    levels[best_layer] += cost > hi ? -1 : 1;
    cost = best_cost;
  }
  return true;
}

}  // namespace

std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = (0 - n) % n;  // 2^64 mod n
  std::uint64_t x;
  do {
    x = rng();
  } while (x < limit);
  return x % n;
}

std::string_view to_string(StartPoint start) {
  return start == StartPoint::kMaxRank ? "max" : "half-cost";
}

StartPoint parse_start_point(std::string_view s) {
  if (s == "max" || s == "max-rank" || s == "max_rank") return StartPoint::kMaxRank;
  if (s == "half-cost" || s == "half_cost" || s == "half") {
    return StartPoint::kHalfCost;
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unknown start point '" + std::string(s) + "'");
}

SpaceConstraints make_constraints(const RankSet& max_init, double delta_s,
                                  double delta_m) {
  if (!(delta_s >= 0.0) || !(delta_m >= 0.0) || delta_m > 1.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "delta_s and delta_m must be non-negative, delta_m <= 1");
  }
  SpaceConstraints space;
  space.max_init = max_init;
  space.max_current = max_init;
  for (std::size_t l = 0; l < max_init.size(); ++l) {
    const Rank m = max_init[l];
    const Rank lo = std::max<Rank>(1, ceil_scaled(delta_m, m));
    if (m < 1 || lo > m) {
      std::ostringstream msg;
      msg << "layer " << l << ": minimum rank " << lo
          << " exceeds maximum rank " << m;
      throw Error(ErrorKind::kValidation, msg.str());
    }
    space.min.values.push_back(lo);
    space.step.values.push_back(std::max<Rank>(1, floor_scaled(delta_s, m)));
  }
  return space;
}

RankSet max_reduction(const SpaceConstraints& space,
                      std::span<const std::int64_t> coefficients,
                      std::int64_t delta_c, double delta_r, bool step_floor) {
  RankSet out;
  for (std::size_t l = 0; l < space.max_current.size(); ++l) {
    const Rank by_cost = coefficients[l] > 0 ? delta_c / coefficients[l] : 0;
    Rank by_ratio = floor_scaled(2.0 * delta_r, space.max_current[l]);
    if (step_floor) by_ratio = std::max(by_ratio, space.step[l]);
    const Rank by_room = space.max_current[l] - space.min[l];
    out.values.push_back(std::max<Rank>(0, std::min({by_cost, by_ratio, by_room})));
  }
  return out;
}

SearchInit init_search(const CostModel& cm, const RankSet& max_init,
                       const SearchConfig& config) {
  if (max_init.size() != cm.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "max rank list is not aligned with the cost model");
  }
  for (auto c : cm.coefficients) {
    if (c <= 0) {
      throw Error(ErrorKind::kValidation, "cost coefficients must be positive");
    }
  }
  if (!(config.delta_r > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "delta_r must be positive");
  }
  SearchInit init;
  init.space = make_constraints(max_init, config.delta_s, config.delta_m);
  init.c_max = cm.cost(max_init);
  init.delta_c0 = static_cast<std::int64_t>(
      std::floor(config.delta_r * static_cast<double>(init.c_max) + kRoundingSlack));
  init.plan.delta_c = init.delta_c0;
  init.plan.delta_r = config.delta_r;
  init.plan.delta_c_min = config.delta_c_min
                              ? *config.delta_c_min
                              : std::max<std::int64_t>(1, init.delta_c0 / 16);
  if (config.sigma) {
    init.plan.sigma = *config.sigma;
  } else {
    std::int64_t smallest = std::numeric_limits<std::int64_t>::max();
    for (std::size_t l = 0; l < cm.size(); ++l) {
      smallest = std::min(smallest, cm.coefficients[l] * init.space.step[l]);
    }
    init.plan.sigma = std::max(smallest, init.delta_c0 / 100);
  }
  init.start = config.start == StartPoint::kMaxRank
                   ? max_init
                   : scaled_cost_rank_set(cm, init.space, 0.5);
  init.space.max_current = init.start;
  init.plan.max_reduction =
      max_reduction(init.space, cm.coefficients, init.plan.delta_c,
                    config.delta_r, config.step_floor);
  return init;
}

SearchInit init_search(const NetworkModel& model, const CostModel& cm,
                       const SearchConfig& config) {
  return init_search(cm, max_rank_set(model, cm), config);
}

RankSet scaled_cost_rank_set(const CostModel& cm, const SpaceConstraints& space,
                             double fraction) {
  auto at = [&](double t) {
    RankSet r;
    for (std::size_t l = 0; l < space.max_init.size(); ++l) {
      const Rank scaled = static_cast<Rank>(
          std::floor(t * static_cast<double>(space.max_init[l])));
      r.values.push_back(std::clamp(scaled, space.min[l], space.max_init[l]));
    }
    return r;
  };
  const double budget =
      fraction * static_cast<double>(cm.variable_cost(space.max_init));
  if (static_cast<double>(cm.variable_cost(at(0.0))) > budget) return at(0.0);
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 64; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (static_cast<double>(cm.variable_cost(at(mid))) <= budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return at(lo);
}

std::vector<RankSet> sample_candidates(const ReductionPlan& plan,
                                       const SpaceConstraints& space,
                                       std::span<const std::int64_t> coefficients,
                                       const RankSet& prev,
                                       const RejectionFrontier& frontier,
                                       std::size_t n_candidates, Rng& rng,
                                       const SamplingOptions& options) {
  const std::size_t n_layers = prev.size();
  if (plan.max_reduction.size() != n_layers || coefficients.size() != n_layers ||
      space.step.size() != n_layers) {
    throw Error(ErrorKind::kInvalidArgument, "sampling inputs are misaligned");
  }
  std::vector<RankSet> out;
  if (n_candidates == 0) return out;

  const std::int64_t lo = plan.delta_c - plan.sigma;
  const std::int64_t hi = plan.delta_c + plan.sigma;
  std::vector<Rank> max_levels(n_layers);
  std::vector<std::int64_t> unit(n_layers);
  double lattice = 1.0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    max_levels[l] = std::max<Rank>(0, plan.max_reduction[l] / space.step[l]);
    unit[l] = coefficients[l] * space.step[l];
    lattice *= static_cast<double>(max_levels[l] + 1);
  }

  auto make = [&](const std::vector<Rank>& levels) -> std::optional<RankSet> {
    const auto reduction = reduction_cost(coefficients, space.step, levels);
    if (reduction <= 0 || reduction < lo || reduction > hi) return std::nullopt;
    RankSet r = prev;
    for (std::size_t l = 0; l < n_layers; ++l) {
      r[l] -= levels[l] * space.step[l];
      if (r[l] < space.min[l]) return std::nullopt;
    }
    if (frontier.contains(r)) return std::nullopt;
    return r;
  };

  if (n_layers <= options.exhaustive_max_layers &&
      lattice <= static_cast<double>(options.exhaustive_limit)) {
    std::vector<RankSet> all;
    std::vector<Rank> levels(n_layers, 0);
    for (;;) {
      if (auto r = make(levels)) all.push_back(std::move(*r));
      std::size_t l = 0;
      while (l < n_layers && levels[l] == max_levels[l]) levels[l++] = 0;
      if (l == n_layers) break;
      ++levels[l];
    }
    if (all.size() <= n_candidates) return all;
    std::vector<std::size_t> idx(all.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < n_candidates; ++i) {
      const auto j = i + uniform_below(rng, idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(n_candidates);
    std::sort(idx.begin(), idx.end());
    for (auto i : idx) out.push_back(std::move(all[i]));
    return out;
  }

  std::set<RankSet> seen;
  const std::size_t attempts = options.attempt_factor * n_candidates;
  std::vector<Rank> levels(n_layers);
  for (std::size_t a = 0; a < attempts && out.size() < n_candidates; ++a) {
    for (std::size_t l = 0; l < n_layers; ++l) {
      levels[l] = static_cast<Rank>(
          uniform_below(rng, static_cast<std::uint64_t>(max_levels[l] + 1)));
    }
    if (!repair(levels, max_levels, unit, plan.delta_c, lo, hi)) continue;
    auto r = make(levels);
    if (r && seen.insert(*r).second) out.push_back(std::move(*r));
  }
  return out;
}

StepDecision select_step(std::span<const ScoredRankSet> scored, double tau_a,
                         const CostModel& cm, std::int64_t delta_c) {
  StepDecision d;
  d.next_delta_c = delta_c / 2;
  if (scored.empty()) return d;
  const ScoredRankSet* best = &scored[0];
  std::int64_t best_cost = cm.cost(best->ranks);
  for (std::size_t i = 1; i < scored.size(); ++i) {
    const auto& s = scored[i];
    const auto c = cm.cost(s.ranks);
    const bool better =
        s.accuracy > best->accuracy ||
        (s.accuracy == best->accuracy &&
         (c < best_cost || (c == best_cost && s.ranks < best->ranks)));
    if (better) {
      best = &s;
      best_cost = c;
    }
  }
  d.best = *best;
  d.best_cost = best_cost;
  d.accepted = best->accuracy > tau_a;
  d.next_delta_c = d.accepted ? delta_c : delta_c / 2;
  return d;
}

std::vector<AcceptedSet> SearchTrace::accepted() const {
  std::vector<AcceptedSet> out;
  for (const auto& rec : iterations) {
    if (!rec.accepted) continue;
    out.push_back({rec.iteration, rec.ranks, rec.cost, rec.best_score.value_or(0.0)});
  }
  return out;
}

RankSet SearchTrace::final_ranks() const {
  for (auto it = iterations.rbegin(); it != iterations.rend(); ++it) {
    if (it->accepted) return it->ranks;
  }
  return start;
}

SearchTrace run_stage1(const CostModel& cm, const RankSet& max_init,
                       double tau_a, Evaluator& evaluator,
                       const SearchConfig& config,
                       const IterationCallback& on_iteration) {
  SearchInit init = init_search(cm, max_init, config);
  SearchTrace trace;
  trace.seed = config.seed;
  trace.target = std::string(to_string(cm.target));
  trace.tau_a = tau_a;
  trace.c_max = init.c_max;
  trace.delta_c0 = init.delta_c0;
  trace.delta_c_min = init.plan.delta_c_min;
  trace.start = init.start;
  trace.start_cost = cm.cost(init.start);

  Rng rng(config.seed);
  RejectionFrontier frontier;
  SamplingOptions sampling{config.exhaustive_limit, config.exhaustive_max_layers,
                           config.attempt_factor};
  RankSet current = init.start;
  ReductionPlan plan = init.plan;

  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    plan.max_reduction = max_reduction(init.space, cm.coefficients, plan.delta_c,
                                       config.delta_r, config.step_floor);
    IterationRecord rec;
    rec.iteration = it;
    rec.delta_c = plan.delta_c;
    rec.sigma = plan.sigma;
    auto candidates = sample_candidates(plan, init.space, cm.coefficients,
                                        current, frontier, config.n_candidates,
                                        rng, sampling);
    if (candidates.empty()) {
      // Widen the margin once before giving up on this cost step.
      ReductionPlan wide = plan;
      wide.sigma = std::max<std::int64_t>(1, plan.sigma * 2);
      candidates = sample_candidates(wide, init.space, cm.coefficients, current,
                                     frontier, config.n_candidates, rng,
                                     sampling);
      rec.sigma = wide.sigma;
    }
    rec.candidates = candidates.size();

    StepDecision decision;
    decision.next_delta_c = plan.delta_c / 2;
    if (!candidates.empty()) {
      const auto scored = score_candidates(evaluator, candidates, Stage::kScore0,
                                           config.workers);
      rec.rejected = reject_and_update(frontier, scored, tau_a);
      decision = select_step(scored, tau_a, cm, plan.delta_c);
    }
    if (decision.best) {
      rec.best_score = decision.best->accuracy;
      rec.ranks = decision.best->ranks;
      rec.cost = decision.best_cost;
    } else {
      rec.ranks = current;
      rec.cost = cm.cost(current);
    }
    rec.accepted = decision.accepted;
    if (decision.accepted) {
      current = decision.best->ranks;
      init.space.max_current = current;
    }
    trace.iterations.push_back(rec);
    if (on_iteration) on_iteration(rec);

    if (!decision.accepted) {
      plan.delta_c = decision.next_delta_c;
      if (plan.delta_c <= plan.delta_c_min) break;
    }
  }
  return trace;
}

Stage2Result run_stage2(const SearchTrace& trace, const AccuracyModel& accuracy,
                        Evaluator& evaluator, const RankSet& fallback) {
  const auto accepted = trace.accepted();
  if (accepted.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "stage 2 needs at least one accepted rank set");
  }
  Stage2Result result;
  for (auto it = accepted.rbegin(); it != accepted.rend(); ++it) {
    Stage2Check check;
    check.iteration = it->iteration;
    check.ranks = it->ranks;
    check.acc02 = evaluator.evaluate(it->ranks, Stage::kFinetune02);
    if (check.acc02 < accuracy.tau_b) {
      result.checks.push_back(std::move(check));
      continue;
    }
    check.acc1 = evaluator.evaluate(it->ranks, Stage::kFinetune1);
    check.passed = *check.acc1 >= accuracy.tau_c;
    result.checks.push_back(check);
    if (check.passed) {
      result.ranks = it->ranks;
      result.iteration = it->iteration;
      return result;
    }
  }
  result.ranks = fallback;
  result.fallback = true;
  return result;
}

}  // namespace rankforge
