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

#ifndef RANKFORGE_COST_HPP_
#define RANKFORGE_COST_HPP_

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "rankforge/model.hpp"

namespace rankforge {

enum class CostTarget { kParameters, kOperations };
enum class LayerSelection { kConvOnly, kAllKernelLayers };

std::string_view to_string(CostTarget target);
std::string_view to_string(LayerSelection selection);
CostTarget parse_cost_target(std::string_view s);
LayerSelection parse_layer_selection(std::string_view s);

// Parameter count of the two decomposed sub-layers at `rank`.
std::int64_t layer_params(const LayerSpec& layer, Rank rank);
// Multiply-accumulate count of the two decomposed sub-layers at `rank`.
std::int64_t layer_ops(const LayerSpec& layer, Rank rank);
std::int64_t layer_cost(const LayerSpec& layer, Rank rank, CostTarget target);

// Cost of the undecomposed layer: d^2*S*T parameters and d^2*S*T*H*W
// operations, where H x W is the layer's output size (second sub-layer).
std::int64_t original_params(const LayerSpec& layer);
std::int64_t original_ops(const LayerSpec& layer);
std::int64_t original_cost(const LayerSpec& layer, CostTarget target);

// Largest rank whose decomposed parameter count does not exceed the original.
// May be 0 for tiny layers; such layers cannot be optimized.
Rank max_rank_bound(const LayerSpec& layer);
// As max_rank_bound but throws Error(kValidation) when the bound is 0.
Rank max_rank(const LayerSpec& layer);

// Cost per unit rank of a decomposed layer.
std::int64_t unit_cost(const LayerSpec& layer, CostTarget target);

// Linear cost C(R) = sum_l coeff_l * r_l + fixed_cost over the optimized
// layers; excluded layers contribute a constant at their max rank.
struct CostModel {
  CostTarget target = CostTarget::kOperations;
  std::vector<std::size_t> optimized_layers;  // indices into the model
  std::vector<std::int64_t> coefficients;     // one per optimized layer
  std::int64_t fixed_cost = 0;

  std::size_t size() const { return optimized_layers.size(); }
  // Throws Error(kInvalidArgument) when `ranks` is misaligned.
  std::int64_t cost(const RankSet& ranks) const;
  std::int64_t variable_cost(const RankSet& ranks) const;
};

CostModel build_cost_model(const NetworkModel& model, CostTarget target,
                           LayerSelection selection);
// Cost model over an explicit subset of layer indices.
CostModel build_cost_model(const NetworkModel& model, CostTarget target,
                           const std::vector<std::size_t>& layers);

std::int64_t total_cost(const NetworkModel& model, const CostModel& cm,
                        const RankSet& ranks);

// Whole-network cost with no layer decomposed.
std::int64_t original_total(const NetworkModel& model, CostTarget target);

// Max ranks of the optimized layers.
RankSet max_rank_set(const NetworkModel& model, const CostModel& cm);

// Fraction of `target` cost carried by each layer kind.
struct CostShare {
  std::int64_t convolutional = 0;
  std::int64_t fully_connected = 0;
  double conv_fraction() const;
  double fc_fraction() const;
};
CostShare original_share(const NetworkModel& model, CostTarget target);
// Every layer decomposed at its max rank (layers with bound 0 undecomposed).
CostShare max_rank_share(const NetworkModel& model, CostTarget target);

// Per-layer rows for the full network at the given ranks of the optimized
// layers; non-optimized layers are reported at max rank.
struct LayerCostRow {
  std::string name;
  bool optimized = false;
  Rank rank = 0;
  std::int64_t params = 0;
  std::int64_t ops = 0;
  double share = 0.0;  // of the target cost
};
struct CostReport {
  CostTarget target = CostTarget::kOperations;
  std::vector<LayerCostRow> rows;
  std::int64_t total_params = 0;
  std::int64_t total_ops = 0;
  std::int64_t original_params = 0;
  std::int64_t original_ops = 0;
  double speedup() const;           // original / decomposed, target cost
  double params_reduction() const;  // original / decomposed params
};
CostReport cost_report(const NetworkModel& model, const CostModel& cm,
                       const RankSet& ranks);
void write_cost_csv(const CostReport& report, std::ostream& out);

}  // namespace rankforge

#endif  // RANKFORGE_COST_HPP_
