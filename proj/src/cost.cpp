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

#include "rankforge/cost.hpp"

#include <ostream>
#include <sstream>

#include "rankforge/error.hpp"

namespace rankforge {

std::string_view to_string(CostTarget target) {
  return target == CostTarget::kParameters ? "parameters" : "operations";
}

std::string_view to_string(LayerSelection selection) {
  return selection == LayerSelection::kConvOnly ? "conv_only"
                                                : "all_kernel_layers";
}

CostTarget parse_cost_target(std::string_view s) {
  if (s == "parameters" || s == "params") return CostTarget::kParameters;
  if (s == "operations" || s == "ops" || s == "flops") {
    return CostTarget::kOperations;
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unknown cost target '" + std::string(s) + "'");
}

LayerSelection parse_layer_selection(std::string_view s) {
  if (s == "conv_only" || s == "conv") return LayerSelection::kConvOnly;
  if (s == "all_kernel_layers" || s == "all") {
    return LayerSelection::kAllKernelLayers;
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unknown layer selection '" + std::string(s) + "'");
}

std::int64_t layer_params(const LayerSpec& l, Rank rank) {
  const auto d = l.window;
  if (l.scheme == Scheme::kSpatial) {
    return d * rank * (l.in_channels + l.out_channels);
  }
  return rank * (d * d * l.in_channels + l.out_channels);
}

std::int64_t layer_ops(const LayerSpec& l, Rank rank) {
  const auto d = l.window;
  const auto first = l.out1_h * l.out1_w;
  const auto second = l.out2_h * l.out2_w;
  if (l.scheme == Scheme::kSpatial) {
    return rank * d * (l.in_channels * first + l.out_channels * second);
  }
  return rank * (d * d * l.in_channels * first + l.out_channels * second);
}

std::int64_t layer_cost(const LayerSpec& l, Rank rank, CostTarget target) {
  return target == CostTarget::kParameters ? layer_params(l, rank)
                                           : layer_ops(l, rank);
}

std::int64_t original_params(const LayerSpec& l) {
  return l.window * l.window * l.in_channels * l.out_channels;
}

std::int64_t original_ops(const LayerSpec& l) {
  return original_params(l) * l.out2_h * l.out2_w;
}

std::int64_t original_cost(const LayerSpec& l, CostTarget target) {
  return target == CostTarget::kParameters ? original_params(l)
                                           : original_ops(l);
}

Rank max_rank_bound(const LayerSpec& l) {
  const auto d = l.window;
  if (l.scheme == Scheme::kSpatial) {
    return (l.in_channels * l.out_channels * d) /
           (l.in_channels + l.out_channels);
  }
  return (d * d * l.in_channels * l.out_channels) /
         (d * d * l.in_channels + l.out_channels);
}

Rank max_rank(const LayerSpec& l) {
  const Rank r = max_rank_bound(l);
  if (r < 1) {
    throw Error(ErrorKind::kValidation,
                "layer '" + l.name +
                    "' is too small to decompose (max rank 0); exclude it");
  }
  return r;
}

std::int64_t unit_cost(const LayerSpec& l, CostTarget target) {
  return layer_cost(l, 1, target);
}

std::int64_t CostModel::variable_cost(const RankSet& ranks) const {
  if (ranks.size() != coefficients.size()) {
    std::ostringstream msg;
    msg << "rank set has " << ranks.size() << " entries, cost model has "
        << coefficients.size() << " optimized layers";
    throw Error(ErrorKind::kInvalidArgument, msg.str());
  }
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    sum += coefficients[i] * ranks[i];
  }
  return sum;
}

std::int64_t CostModel::cost(const RankSet& ranks) const {
  return variable_cost(ranks) + fixed_cost;
}

namespace {

// Cost of a layer that is not optimized: decomposed at its max rank, or kept
// whole when it cannot be decomposed.
std::int64_t fixed_layer_cost(const LayerSpec& l, CostTarget target) {
  const Rank r = max_rank_bound(l);
  return r >= 1 ? layer_cost(l, r, target) : original_cost(l, target);
}

}  // namespace

CostModel build_cost_model(const NetworkModel& model, CostTarget target,
                           const std::vector<std::size_t>& layers) {
  if (layers.empty()) {
    throw Error(ErrorKind::kValidation, "no layers selected for optimization");
  }
  CostModel cm;
  cm.target = target;
  std::vector<bool> selected(model.layers.size(), false);
  for (std::size_t idx : layers) {
    if (idx >= model.layers.size()) {
      throw Error(ErrorKind::kInvalidArgument, "layer index out of range");
    }
    if (selected[idx]) {
      throw Error(ErrorKind::kInvalidArgument,
                  "layer '" + model.layers[idx].name + "' selected twice");
    }
    selected[idx] = true;
    max_rank(model.layers[idx]);  // throws for undecomposable layers
    cm.optimized_layers.push_back(idx);
    cm.coefficients.push_back(unit_cost(model.layers[idx], target));
  }
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!selected[i]) cm.fixed_cost += fixed_layer_cost(model.layers[i], target);
  }
  return cm;
}

CostModel build_cost_model(const NetworkModel& model, CostTarget target,
                           LayerSelection selection) {
  std::vector<std::size_t> layers;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    if (selection == LayerSelection::kConvOnly &&
        l.kind != LayerKind::kConvolutional) {
      continue;
    }
    if (max_rank_bound(l) < 1) continue;
    layers.push_back(i);
  }
  return build_cost_model(model, target, layers);
}

std::int64_t total_cost(const NetworkModel& model, const CostModel& cm,
                        const RankSet& ranks) {
  (void)model;
  return cm.cost(ranks);
}

std::int64_t original_total(const NetworkModel& model, CostTarget target) {
  std::int64_t sum = 0;
  for (const auto& l : model.layers) sum += original_cost(l, target);
  return sum;
}

RankSet max_rank_set(const NetworkModel& model, const CostModel& cm) {
  RankSet out;
  for (std::size_t idx : cm.optimized_layers) {
    out.values.push_back(max_rank(model.layers[idx]));
  }
  return out;
}

double CostShare::conv_fraction() const {
  const auto total = convolutional + fully_connected;
  return total ? static_cast<double>(convolutional) / total : 0.0;
}

double CostShare::fc_fraction() const {
  const auto total = convolutional + fully_connected;
  return total ? static_cast<double>(fully_connected) / total : 0.0;
}

CostShare original_share(const NetworkModel& model, CostTarget target) {
  CostShare share;
  for (const auto& l : model.layers) {
    auto& bucket = l.kind == LayerKind::kConvolutional ? share.convolutional
                                                       : share.fully_connected;
    bucket += original_cost(l, target);
  }
  return share;
}

CostShare max_rank_share(const NetworkModel& model, CostTarget target) {
  CostShare share;
  for (const auto& l : model.layers) {
    auto& bucket = l.kind == LayerKind::kConvolutional ? share.convolutional
                                                       : share.fully_connected;
    bucket += fixed_layer_cost(l, target);
  }
  return share;
}

double CostReport::speedup() const {
  return total_ops ? static_cast<double>(original_ops) / total_ops : 0.0;
}

double CostReport::params_reduction() const {
  return total_params ? static_cast<double>(original_params) / total_params
                      : 0.0;
}

CostReport cost_report(const NetworkModel& model, const CostModel& cm,
                       const RankSet& ranks) {
  if (ranks.size() != cm.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "rank set is not aligned with the cost model");
  }
  CostReport report;
  report.target = cm.target;
  std::vector<std::optional<Rank>> chosen(model.layers.size());
  for (std::size_t i = 0; i < cm.size(); ++i) {
    chosen[cm.optimized_layers[i]] = ranks[i];
  }
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    LayerCostRow row;
    row.name = l.name;
    row.optimized = chosen[i].has_value();
    const Rank r = chosen[i] ? *chosen[i] : max_rank_bound(l);
    row.rank = r;
    if (r >= 1) {
      row.params = layer_params(l, r);
      row.ops = layer_ops(l, r);
    } else {
      row.params = original_params(l);
      row.ops = original_ops(l);
    }
    report.total_params += row.params;
    report.total_ops += row.ops;
    report.original_params += original_params(l);
    report.original_ops += original_ops(l);
    report.rows.push_back(std::move(row));
  }
  const auto total = cm.target == CostTarget::kParameters ? report.total_params
                                                          : report.total_ops;
  for (auto& row : report.rows) {
    const auto c = cm.target == CostTarget::kParameters ? row.params : row.ops;
    row.share = total ? static_cast<double>(c) / total : 0.0;
  }
  return report;
}

void write_cost_csv(const CostReport& report, std::ostream& out) {
  out << "name,optimized,rank,params,ops,share\n";
  for (const auto& row : report.rows) {
    out << row.name << ',' << (row.optimized ? 1 : 0) << ',' << row.rank << ','
        << row.params << ',' << row.ops << ',' << row.share << '\n';
  }
  out << "total,,," << report.total_params << ',' << report.total_ops
      << ",1\n";
  out << "original,,," << report.original_params << ',' << report.original_ops
      << ",\n";
  out << "reduction,,," << report.params_reduction() << ','
      << report.speedup() << ",\n";
}

}  // namespace rankforge
