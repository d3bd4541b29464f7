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

#ifndef RANKFORGE_RUN_CONFIG_HPP_
#define RANKFORGE_RUN_CONFIG_HPP_

#include <optional>
#include <string>
#include <string_view>

#include "rankforge/cost.hpp"
#include "rankforge/evaluator.hpp"
#include "rankforge/search.hpp"

namespace rankforge {

// Everything a run needs besides the model itself. Parsed from a JSON object
// whose keys mirror the CLI flags (dashes replaced by underscores).
struct RunConfig {
  std::string model;
  CostTarget target = CostTarget::kOperations;
  LayerSelection layers = LayerSelection::kAllKernelLayers;

  std::optional<double> mu_star;
  // Direct threshold overrides; tau_a alone sets all three.
  std::optional<double> tau_a;
  std::optional<double> tau_b;
  std::optional<double> tau_c;
  // JSON file with calibration points ({"points":[{"acc0":..,...}]}).
  std::string calibration;

  SearchConfig search;

  // Unset kind: external when a command is available (config or
  // RANKFORGE_EVALUATOR), else the PCA proxy when all optimized layers carry
  // weights, else the synthetic oracle.
  std::optional<EvaluatorKind> evaluator_kind;
  EvaluatorConfig evaluator;
  // Evaluation journal; defaults to <out>/eval_cache.jsonl for external
  // evaluators. "none" disables it.
  std::string eval_cache;

  std::string out = ".";
  bool stage2 = false;
};

// Throws Error(kParse) for malformed JSON and Error(kInvalidArgument) for
// unknown keys or out-of-range values.
RunConfig parse_run_config(std::string_view json_text);
std::string to_json(const RunConfig& config);

}  // namespace rankforge

#endif  // RANKFORGE_RUN_CONFIG_HPP_
