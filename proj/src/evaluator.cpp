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

#include "rankforge/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "rankforge/error.hpp"
#include "rankforge/lowrank.hpp"

namespace rankforge {
namespace {

using nlohmann::json;

void check_ranks(const RankSet& ranks, const RankSet& max_ranks) {
  if (ranks.size() != max_ranks.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "rank set is not aligned with the optimized layers");
  }
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] < 1 || ranks[i] > max_ranks[i]) {
      std::ostringstream msg;
      msg << "rank " << ranks[i] << " of layer " << i << " outside [1, "
          << max_ranks[i] << "]";
      throw Error(ErrorKind::kInvalidArgument, msg.str());
    }
  }
}

}  // namespace

SyntheticOracle::SyntheticOracle(RankSet max_ranks, double exponent)
    : max_ranks_(std::move(max_ranks)), exponent_(exponent) {}

void SyntheticOracle::set_stage_map(Stage stage, AffineMap map) {
  stage_maps_[stage] = map;
}

double SyntheticOracle::evaluate(const RankSet& ranks, Stage stage) {
  check_ranks(ranks, max_ranks_);
  double log_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    log_sum += std::log(static_cast<double>(ranks[i]) /
                        static_cast<double>(max_ranks_[i]));
  }
  double value = std::exp(exponent_ * log_sum);
  if (auto it = stage_maps_.find(stage); it != stage_maps_.end()) {
    value = std::clamp(it->second(value), 0.0, 1.0);
  }
  return value;
}

PcaEnergyProxy::PcaEnergyProxy(const NetworkModel& model, const CostModel& cm) {
  for (std::size_t idx : cm.optimized_layers) {
    if (!model.has_weights(idx)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "PCA energy proxy needs weights for layer '" +
                      model.layers[idx].name + "'");
    }
    const Matrix k = model.weights[idx]->cast<double>();
    const Vector sigma = svd(k).singular_values;
    const double total = sigma.squaredNorm();
    std::vector<double> cumulative(static_cast<std::size_t>(sigma.size()) + 1, 0.0);
    double running = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
      running += sigma(i) * sigma(i);
      cumulative[static_cast<std::size_t>(i) + 1] =
          total > 0.0 ? running / total : 1.0;
    }
    cumulative.back() = 1.0;
    cumulative_.push_back(std::move(cumulative));
  }
}

double PcaEnergyProxy::evaluate(const RankSet& ranks, Stage) {
  if (ranks.size() != cumulative_.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "rank set is not aligned with the optimized layers");
  }
  double score = 0.0;
  for (std::size_t l = 0; l < ranks.size(); ++l) {
    const auto& cum = cumulative_[l];
    const Rank r = ranks[l];
    if (r < 1 || static_cast<std::size_t>(r) >= cum.size()) {
      throw Error(ErrorKind::kInvalidArgument, "rank out of range for layer " +
                                                   std::to_string(l));
    }
    score += std::log(cum[static_cast<std::size_t>(r)]);
  }
  return score;
}

double CountingEvaluator::evaluate(const RankSet& ranks, Stage stage) {
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  return inner_.evaluate(ranks, stage);
}

std::uint64_t CountingEvaluator::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

CachingEvaluator::CachingEvaluator(Evaluator& inner,
                                   std::filesystem::path journal)
    : inner_(inner), journal_(std::move(journal)) {
  std::ifstream in(journal_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      cache_[{j.at("ranks").get<std::vector<Rank>>(),
              parse_stage(j.at("stage").get<std::string>())}] =
          j.at("accuracy").get<double>();
    } catch (const std::exception&) {
      // A partially written last record from an interrupted run.
      continue;
    }
  }
}

double CachingEvaluator::evaluate(const RankSet& ranks, Stage stage) {
  auto key = std::make_pair(ranks.values, stage);
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const double acc = inner_.evaluate(ranks, stage);
  std::lock_guard lock(mu_);
  ++misses_;
  if (cache_.emplace(key, acc).second) {
    json j;
    j["ranks"] = ranks.values;
    j["stage"] = to_string(stage);
    j["accuracy"] = acc;
    std::ofstream out(journal_, std::ios::app);
    if (!out) {
      throw Error(ErrorKind::kIo, "cannot append to " + journal_.string());
    }
    out << j.dump() << '\n';
  }
  return acc;
}

std::size_t CachingEvaluator::cached_entries() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

std::uint64_t CachingEvaluator::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

std::vector<ScoredRankSet> score_candidates(Evaluator& evaluator,
                                            std::span<const RankSet> candidates,
                                            Stage stage, std::size_t workers) {
  std::vector<ScoredRankSet> out(candidates.size());
  if (candidates.empty()) return out;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  if (const auto cap = evaluator.max_concurrency(); cap > 0) {
    workers = std::min(workers, cap);
  }
  workers = std::min(workers, candidates.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= candidates.size()) return;
      try {
        out[i].ranks = candidates[i];
        out[i].accuracy = evaluator.evaluate(candidates[i], stage);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::string_view to_string(EvaluatorKind kind) {
  switch (kind) {
    case EvaluatorKind::kExternalProcess: return "external_process";
    case EvaluatorKind::kPcaEnergyProxy: return "pca_energy_proxy";
    case EvaluatorKind::kSyntheticOracle: return "synthetic_oracle";
  }
  return "synthetic_oracle";
}

EvaluatorKind parse_evaluator_kind(std::string_view s) {
  if (s == "external_process" || s == "external") {
    return EvaluatorKind::kExternalProcess;
  }
  if (s == "pca_energy_proxy" || s == "pca") return EvaluatorKind::kPcaEnergyProxy;
  if (s == "synthetic_oracle" || s == "synthetic") {
    return EvaluatorKind::kSyntheticOracle;
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unknown evaluator kind '" + std::string(s) + "'");
}

std::unique_ptr<Evaluator> make_evaluator(const EvaluatorConfig& config,
                                          const NetworkModel& model,
                                          const CostModel& cm) {
  if (!(config.subset_fraction > 0.0 && config.subset_fraction <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "subset_fraction must lie in (0, 1]");
  }
  switch (config.kind) {
    case EvaluatorKind::kSyntheticOracle:
      return std::make_unique<SyntheticOracle>(max_rank_set(model, cm),
                                               config.exponent);
    case EvaluatorKind::kPcaEnergyProxy:
      return std::make_unique<PcaEnergyProxy>(model, cm);
    case EvaluatorKind::kExternalProcess: {
      if (config.command.empty()) {
        throw Error(ErrorKind::kEvaluator, "no evaluator command configured");
      }
      ExternalEvaluatorOptions opts;
      opts.command = config.command;
      for (std::size_t idx : cm.optimized_layers) {
        opts.layer_names.push_back(model.layers[idx].name);
      }
      opts.subset_fraction = config.subset_fraction;
      opts.seed = config.seed;
      opts.timeout = std::chrono::milliseconds(
          static_cast<std::int64_t>(config.timeout_seconds * 1000.0));
      opts.processes = std::max<std::size_t>(1, config.processes);
      return std::make_unique<ExternalProcessEvaluator>(std::move(opts));
    }
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown evaluator kind");
}

}  // namespace rankforge
