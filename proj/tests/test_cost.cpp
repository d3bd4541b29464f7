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

#include <random>
#include <sstream>

#include "doctest.h"
#include "rankforge/cost.hpp"
#include "rankforge/error.hpp"
#include "test_util.hpp"

using namespace rankforge;

namespace {

LayerSpec make(std::int64_t d, std::int64_t s, std::int64_t t, Scheme scheme,
               std::int64_t hw = 1) {
  LayerSpec l;
  l.name = "l";
  l.window = d;
  l.in_channels = s;
  l.out_channels = t;
  l.scheme = scheme;
  l.out1_h = l.out1_w = l.out2_h = l.out2_w = hw;
  l.kind = d == 1 && hw == 1 ? LayerKind::kFullyConnected : LayerKind::kConvolutional;
  return l;
}

// Largest r whose decomposed parameter count stays within the original.
Rank scan_max_rank(const LayerSpec& l) {
  const auto limit = l.window * l.window * l.in_channels * l.out_channels;
  Rank r = 0;
  while (layer_params(l, r + 1) <= limit) ++r;
  return r;
}

}  // namespace

TEST_CASE("parameter counts") {
  CHECK(layer_params(make(3, 3, 64, Scheme::kSpatial), 5) == 1005);
  CHECK(layer_params(make(1, 4096, 4096, Scheme::kSpatial), 1) == 8192);
  CHECK(layer_params(make(11, 3, 96, Scheme::kChannel), 10) == 4590);
}

TEST_CASE("operation counts") {
  CHECK(layer_ops(make(3, 3, 64, Scheme::kSpatial, 224), 5) == 50'426'880);
  CHECK(layer_ops(make(1, 4096, 1000, Scheme::kSpatial), 1) == 5096);
  CHECK(original_ops(make(3, 64, 64, Scheme::kSpatial, 112)) == 462'422'016);
  LayerSpec strided = make(11, 3, 96, Scheme::kChannel, 55);
  CHECK(layer_ops(strided, 2) == 2 * (121 * 3 * 55 * 55 + 96 * 55 * 55));
}

TEST_CASE("max rank bound") {
  CHECK(max_rank(make(3, 64, 64, Scheme::kSpatial)) == 96);
  CHECK(max_rank(make(1, 4096, 4096, Scheme::kSpatial)) == 2048);
  const auto c = make(11, 3, 96, Scheme::kChannel);
  CHECK(max_rank(c) == 75);
  CHECK(scan_max_rank(c) == 75);
  CHECK(max_rank_bound(make(1, 1, 1, Scheme::kSpatial)) == 0);
  CHECK_THROWS_AS(max_rank(make(1, 1, 1, Scheme::kSpatial)), Error);
}

TEST_CASE("max rank matches a linear scan on random shapes") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> dd(1, 7), cc(1, 300);
  for (int i = 0; i < 300; ++i) {
    const auto l = make(dd(rng), cc(rng), cc(rng),
                        i % 2 ? Scheme::kSpatial : Scheme::kChannel);
    CHECK(max_rank_bound(l) == scan_max_rank(l));
  }
}

TEST_CASE("unit cost is the cost at rank one") {
  LayerSpec l = make(3, 8, 16, Scheme::kSpatial, 10);
  l.name = "only";
  NetworkModel m;
  m.layers = {l};
  const auto cm = build_cost_model(m, CostTarget::kOperations,
                                   LayerSelection::kAllKernelLayers);
  CHECK(cm.coefficients == std::vector<std::int64_t>{layer_ops(l, 1)});
  CHECK(cm.fixed_cost == 0);
  CHECK(cm.cost(RankSet({7})) == 7 * layer_ops(l, 1));
}

TEST_CASE("single layer with unit cost ten") {
  CostModel cm;
  cm.optimized_layers = {0};
  cm.coefficients = {10};
  CHECK(cm.cost(RankSet({7})) == 70);
  CHECK_THROWS_AS(cm.cost(RankSet({7, 1})), Error);
}

TEST_CASE("alexnet selection sizes and C_max by summation") {
  const auto m = load_model(rftest::data_file("alexnet.json"));
  const auto conv = build_cost_model(m, CostTarget::kOperations, LayerSelection::kConvOnly);
  CHECK(conv.size() == 8);
  const auto all = build_cost_model(m, CostTarget::kOperations,
                                    LayerSelection::kAllKernelLayers);
  CHECK(all.size() == 11);
  std::int64_t sum = 0;
  for (const auto& l : m.layers) sum += layer_ops(l, max_rank(l));
  CHECK(all.cost(max_rank_set(m, all)) == sum);
  CHECK(conv.cost(max_rank_set(m, conv)) == sum);
}

TEST_CASE("alexnet cost shares") {
  const auto m = load_model(rftest::data_file("alexnet.json"));
  const auto ops = original_share(m, CostTarget::kOperations);
  CHECK(ops.conv_fraction() == doctest::Approx(0.919).epsilon(0.005));
  const auto params = original_share(m, CostTarget::kParameters);
  CHECK(params.fc_fraction() == doctest::Approx(0.962).epsilon(0.005));
  const auto dec = max_rank_share(m, CostTarget::kParameters);
  CHECK(dec.fc_fraction() == doctest::Approx(0.962).epsilon(0.01));
}

TEST_CASE("vgg16 original operation count") {
  const auto m = load_model(rftest::data_file("vgg16.json"));
  const double total = static_cast<double>(original_total(m, CostTarget::kOperations));
  CHECK(total / 15'530e6 == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("empty selection is a validation error") {
  NetworkModel m;
  m.layers = {make(1, 4096, 10, Scheme::kSpatial)};
  m.layers[0].name = "fc";
  try {
    build_cost_model(m, CostTarget::kOperations, LayerSelection::kConvOnly);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kValidation);
  }
}

TEST_CASE("cost csv layout") {
  const auto m = load_model(rftest::data_file("alexnet.json"));
  const auto cm = build_cost_model(m, CostTarget::kOperations, LayerSelection::kConvOnly);
  auto ranks = max_rank_set(m, cm);
  const auto report = cost_report(m, cm, ranks);
  CHECK(report.rows.size() == 11);
  CHECK(report.total_ops == cm.cost(ranks));
  std::ostringstream out;
  write_cost_csv(report, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "name,optimized,rank,params,ops,share");
  int rows = 0;
  std::string last;
  while (std::getline(in, line)) ++rows, last = line;
  CHECK(rows == 11 + 3);
  CHECK(last.rfind("reduction,", 0) == 0);
}
