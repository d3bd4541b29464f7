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

#ifndef RANKFORGE_MODEL_HPP_
#define RANKFORGE_MODEL_HPP_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace rankforge {

using Rank = std::int64_t;

enum class LayerKind { kConvolutional, kFullyConnected };

// How a kernel is split into two sub-layers.
//   kSpatial: d x 1 filters into r channels, then 1 x d filters.
//   kChannel: d x d filters into r channels, then 1 x 1 filters.
enum class Scheme { kSpatial, kChannel };

std::string_view to_string(LayerKind kind);
std::string_view to_string(Scheme scheme);
LayerKind parse_layer_kind(std::string_view s);
Scheme parse_scheme(std::string_view s);

// Static dimensions of one kernel layer. Grouped convolutions are stored as
// one entry per group; `group` names the logical layer the entry belongs to
// and has no effect on cost arithmetic.
struct LayerSpec {
  std::string name;
  std::string group;
  LayerKind kind = LayerKind::kConvolutional;
  std::int64_t window = 1;
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  // Output spatial size of the first and second decomposed sub-layer.
  std::int64_t out1_h = 1;
  std::int64_t out1_w = 1;
  std::int64_t out2_h = 1;
  std::int64_t out2_w = 1;
  Scheme scheme = Scheme::kSpatial;

  bool operator==(const LayerSpec&) const = default;
};

// Row/column count of the reshaped kernel matrix for the layer's scheme.
struct MatrixShape {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  bool operator==(const MatrixShape&) const = default;
};
MatrixShape kernel_matrix_shape(const LayerSpec& layer);

using WeightMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic>;

struct NetworkModel {
  std::vector<LayerSpec> layers;
  // Index-aligned with `layers`; absent when only dimensions are known.
  std::vector<std::optional<WeightMatrix>> weights;
  std::map<std::string, std::string> metadata;

  std::optional<std::size_t> find_layer(std::string_view name) const;
  bool has_weights(std::size_t layer) const {
    return layer < weights.size() && weights[layer].has_value();
  }
  // Number of distinct logical layers (groups counted once).
  std::size_t logical_layer_count() const;
};

// Bit-exact comparison including weights.
bool operator==(const NetworkModel& a, const NetworkModel& b);

// Throws Error(kValidation) naming the offending layer.
void validate_layer(const LayerSpec& layer);
void validate_model(const NetworkModel& model);

NetworkModel load_model(const std::filesystem::path& path);
void save_model(const NetworkModel& model, const std::filesystem::path& path);

// Weight blob: u64 rows, u64 cols (little endian), then rows*cols
// little-endian float32 values in row-major order.
WeightMatrix read_weight_blob(const std::filesystem::path& path);
void write_weight_blob(const WeightMatrix& m, const std::filesystem::path& path);

// Per-layer ranks, index-aligned with a cost model's optimized layer list.
struct RankSet {
  std::vector<Rank> values;

  RankSet() = default;
  explicit RankSet(std::vector<Rank> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  Rank operator[](std::size_t i) const { return values[i]; }
  Rank& operator[](std::size_t i) { return values[i]; }

  // Elementwise a <= b.
  bool dominated_by(const RankSet& other) const;

  // Lexicographic order; used for deterministic tie-breaking.
  auto operator<=>(const RankSet&) const = default;
  bool operator==(const RankSet&) const = default;
};

std::string format_ranks(const RankSet& r);

}  // namespace rankforge

#endif  // RANKFORGE_MODEL_HPP_
