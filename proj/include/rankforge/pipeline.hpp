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

#ifndef RANKFORGE_PIPELINE_HPP_
#define RANKFORGE_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rankforge/accuracy.hpp"
#include "rankforge/evaluator.hpp"
#include "rankforge/model.hpp"
#include "rankforge/run_config.hpp"
#include "rankforge/search.hpp"

// End-to-end operations shared by the C API and the CLI.
namespace rankforge {

struct PlanRow {
  std::string name;
  Scheme scheme = Scheme::kSpatial;
  Rank max_rank = 0;
  Rank min_rank = 0;
  Rank step = 0;
  std::int64_t coefficient = 0;
};

struct PlanSummary {
  CostTarget target = CostTarget::kOperations;
  std::vector<PlanRow> rows;
  std::int64_t c_max = 0;
  std::int64_t fixed_cost = 0;
  std::int64_t delta_c0 = 0;
  std::int64_t delta_c_min = 0;
  std::int64_t sigma = 0;
  std::int64_t original_total = 0;
};

PlanSummary plan(const NetworkModel& model, const RunConfig& config);
std::string to_json(const PlanSummary& summary);

// Ordered (layer name, rank) pairs.
struct NamedRanks {
  std::vector<std::pair<std::string, Rank>> entries;
  std::optional<Rank> find(const std::string& name) const;
};
void write_rank_file(const NamedRanks& ranks, const std::filesystem::path& path);
NamedRanks read_rank_file(const std::filesystem::path& path);
NamedRanks name_ranks(const NetworkModel& model, const CostModel& cm,
                      const RankSet& ranks);

std::unique_ptr<Evaluator> resolve_evaluator(const NetworkModel& model,
                                             const CostModel& cm,
                                             const RunConfig& config);

// Thresholds from overrides, a calibration file, or by evaluating the
// max-cost and half-cost models at every stage (in that order of preference).
AccuracyModel resolve_accuracy_model(const NetworkModel& model,
                                     const CostModel& cm,
                                     const RunConfig& config,
                                     Evaluator& evaluator);

void write_accuracy_model(const AccuracyModel& m,
                          const std::filesystem::path& path);
AccuracyModel read_accuracy_model(const std::filesystem::path& path);

struct SearchOutcome {
  std::filesystem::path trace_path;
  std::filesystem::path ranks_path;
  std::size_t accepted = 0;
  std::int64_t final_cost = 0;
  bool stage2_run = false;
  bool fallback = false;
};

// Writes <out>/trace.jsonl, <out>/accuracy_model.json, <out>/stage1_ranks.json
// and <out>/final_ranks.json; with config.stage2 also <out>/stage2.json.
SearchOutcome run_search(const NetworkModel& model, const RunConfig& config);

// Stage 2 over an existing <out>/trace.jsonl and <out>/accuracy_model.json.
SearchOutcome run_stage2_from_files(const NetworkModel& model,
                                    const RunConfig& config);

// Decomposes every layer (rank from the file, else its max rank) and writes a
// decomposed model document with two sub-layers per layer plus weight blobs.
// Throws Error(kInvalidArgument) if a layer lacks weights.
void decompose_model(const NetworkModel& model, const NamedRanks& ranks,
                     const std::filesystem::path& out_path);

struct DecomposedEntry {
  std::string name;
  std::string source;
  int part = 1;
  Rank rank = 0;
  WeightMatrix weights;
};
std::vector<DecomposedEntry> load_decomposed(const std::filesystem::path& path);

// Writes iterations.csv and accepted.csv to `out_dir`; with a model also
// layers.csv for the final rank set.
void write_report(const std::filesystem::path& trace_path,
                  const std::filesystem::path& out_dir,
                  const NetworkModel* model);

}  // namespace rankforge

#endif  // RANKFORGE_PIPELINE_HPP_
