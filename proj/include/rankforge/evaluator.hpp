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

#ifndef RANKFORGE_EVALUATOR_HPP_
#define RANKFORGE_EVALUATOR_HPP_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "rankforge/accuracy.hpp"
#include "rankforge/cost.hpp"
#include "rankforge/model.hpp"

namespace rankforge {

// Maps a rank set (index-aligned with a cost model's optimized layers) and a
// training stage to a scalar accuracy.
class Evaluator {
 public:
  virtual ~Evaluator() = default;

  virtual double evaluate(const RankSet& ranks, Stage stage) = 0;

  // Upper bound on useful concurrent evaluate() calls. Built-in evaluators
  // are pure and return 0 (no limit).
  virtual std::size_t max_concurrency() const { return 0; }
};

// Wraps an arbitrary function; the function must be thread-safe.
class FunctionEvaluator : public Evaluator {
 public:
  using Fn = std::function<double(const RankSet&, Stage)>;
  explicit FunctionEvaluator(Fn fn) : fn_(std::move(fn)) {}
  double evaluate(const RankSet& ranks, Stage stage) override {
    return fn_(ranks, stage);
  }

 private:
  Fn fn_;
};

// f(R) = prod_l (r_l / r_max_l)^exponent; 1.0 at full rank. Later stages are
// obtained by applying optional affine maps to the score0 value, clamped to
// [0, 1].
class SyntheticOracle : public Evaluator {
 public:
  SyntheticOracle(RankSet max_ranks, double exponent = 0.1);

  void set_stage_map(Stage stage, AffineMap map);
  double evaluate(const RankSet& ranks, Stage stage) override;

 private:
  RankSet max_ranks_;
  double exponent_;
  std::map<Stage, AffineMap> stage_maps_;
};

// Sum over optimized layers of log(retained singular-value energy fraction).
// The maximum, 0, is reached at full rank; values are <= 0. The score does
// not depend on the stage.
class PcaEnergyProxy : public Evaluator {
 public:
  // Requires weights for every optimized layer (Error(kInvalidArgument)).
  PcaEnergyProxy(const NetworkModel& model, const CostModel& cm);

  double evaluate(const RankSet& ranks, Stage stage) override;
  const std::vector<std::vector<double>>& cumulative_energy() const {
    return cumulative_;
  }

 private:
  // cumulative_[l][k] = fraction of energy in the top k singular values.
  std::vector<std::vector<double>> cumulative_;
};

// Counts calls; useful for search-efficiency comparisons.
class CountingEvaluator : public Evaluator {
 public:
  explicit CountingEvaluator(Evaluator& inner) : inner_(inner) {}
  double evaluate(const RankSet& ranks, Stage stage) override;
  std::size_t max_concurrency() const override {
    return inner_.max_concurrency();
  }
  std::uint64_t calls() const;

 private:
  Evaluator& inner_;
  mutable std::mutex mu_;
  std::uint64_t calls_ = 0;
};

// Persists (ranks, stage) -> accuracy in an append-only JSON-lines journal so
// an interrupted run can resume without re-evaluating.
class CachingEvaluator : public Evaluator {
 public:
  CachingEvaluator(Evaluator& inner, std::filesystem::path journal);

  double evaluate(const RankSet& ranks, Stage stage) override;
  std::size_t max_concurrency() const override {
    return inner_.max_concurrency();
  }
  std::size_t cached_entries() const;
  std::uint64_t misses() const;

 private:
  Evaluator& inner_;
  std::filesystem::path journal_;
  mutable std::mutex mu_;
  std::map<std::pair<std::vector<Rank>, Stage>, double> cache_;
  std::uint64_t misses_ = 0;
};

struct ExternalEvaluatorOptions {
  std::string command;  // run through /bin/sh -c
  std::vector<std::string> layer_names;
  double subset_fraction = 0.10;
  std::uint64_t seed = 0;
  std::chrono::milliseconds timeout{600'000};
  std::size_t processes = 1;
};

// Client for the line-delimited JSON evaluator protocol over a child
// process's stdin/stdout. Requests are sequential per process; with several
// processes, calls are spread across an idle-process pool.
class ExternalProcessEvaluator : public Evaluator {
 public:
  // Starts the processes and checks the handshake. Throws Error(kEvaluator).
  explicit ExternalProcessEvaluator(ExternalEvaluatorOptions options);
  ~ExternalProcessEvaluator() override;

  ExternalProcessEvaluator(const ExternalProcessEvaluator&) = delete;
  ExternalProcessEvaluator& operator=(const ExternalProcessEvaluator&) = delete;

  double evaluate(const RankSet& ranks, Stage stage) override;
  std::size_t max_concurrency() const override { return options_.processes; }

 private:
  class Process;
  Process& acquire();
  void release(Process& p);

  ExternalEvaluatorOptions options_;
  std::vector<std::unique_ptr<Process>> processes_;
  std::vector<bool> busy_;
  std::mutex mu_;
  std::condition_variable idle_;
  std::uint64_t next_id_ = 1;
};

struct ScoredRankSet {
  RankSet ranks;
  double accuracy = 0.0;
};

// Scores every candidate at `stage`. Results are index-aligned with the input
// regardless of scheduling. `workers` == 0 picks the hardware concurrency,
// capped by the evaluator's max_concurrency(). The first evaluator error is
// rethrown after all workers stop; partial results are discarded.
std::vector<ScoredRankSet> score_candidates(Evaluator& evaluator,
                                            std::span<const RankSet> candidates,
                                            Stage stage = Stage::kScore0,
                                            std::size_t workers = 0);

enum class EvaluatorKind { kExternalProcess, kPcaEnergyProxy, kSyntheticOracle };
std::string_view to_string(EvaluatorKind kind);
EvaluatorKind parse_evaluator_kind(std::string_view s);

struct EvaluatorConfig {
  EvaluatorKind kind = EvaluatorKind::kSyntheticOracle;
  double subset_fraction = 0.10;
  std::uint64_t seed = 0;
  std::string command;
  double timeout_seconds = 600.0;
  std::size_t processes = 1;
  double exponent = 0.1;  // synthetic oracle only
};

// Builds the evaluator described by `config` for the optimized layers of `cm`.
std::unique_ptr<Evaluator> make_evaluator(const EvaluatorConfig& config,
                                          const NetworkModel& model,
                                          const CostModel& cm);

}  // namespace rankforge

#endif  // RANKFORGE_EVALUATOR_HPP_
