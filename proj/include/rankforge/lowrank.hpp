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

#ifndef RANKFORGE_LOWRANK_HPP_
#define RANKFORGE_LOWRANK_HPP_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "rankforge/model.hpp"

namespace rankforge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thin SVD: for an m x n input with k = min(m, n), u is m x k, v is n x k and
// singular_values has k non-increasing entries.
struct SvdResult {
  Matrix u;
  Vector singular_values;
  Matrix v;
};

struct SvdOptions {
  double tolerance = 1e-12;
  int max_sweeps = 60;
};

// One-sided (Hestenes) Jacobi SVD. Deterministic for a given input.
SvdResult svd(const Matrix& k, const SvdOptions& options = {});

// Rank-r factorization K ~= first * second with the singular values split
// evenly (square roots) between the two factors.
struct DecomposedLayer {
  Matrix first;   // rows(K) x r
  Matrix second;  // r x cols(K)
  Rank rank = 0;
  Scheme scheme = Scheme::kSpatial;
};

DecomposedLayer decompose(const Matrix& k, Rank rank,
                          Scheme scheme = Scheme::kSpatial);
DecomposedLayer decompose(const SvdResult& factors, Rank rank,
                          Scheme scheme = Scheme::kSpatial);

// Sum of squared singular values beyond the first `rank`.
double tail_energy(const Vector& singular_values, Rank rank);

// Dense 4-d kernel indexed (row, col, in, out) with row/col the spatial
// window position. Storage is row-major over that index order.
class KernelTensor {
 public:
  KernelTensor() = default;
  KernelTensor(std::int64_t window, std::int64_t in_channels,
               std::int64_t out_channels);

  std::int64_t window() const { return window_; }
  std::int64_t in_channels() const { return in_; }
  std::int64_t out_channels() const { return out_; }

  double& at(std::int64_t i, std::int64_t j, std::int64_t s, std::int64_t t) {
    return data_[index(i, j, s, t)];
  }
  double at(std::int64_t i, std::int64_t j, std::int64_t s,
            std::int64_t t) const {
    return data_[index(i, j, s, t)];
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const KernelTensor&) const = default;

 private:
  std::size_t index(std::int64_t i, std::int64_t j, std::int64_t s,
                    std::int64_t t) const {
    return static_cast<std::size_t>(((i * window_ + j) * in_ + s) * out_ + t);
  }

  std::int64_t window_ = 0;
  std::int64_t in_ = 0;
  std::int64_t out_ = 0;
  std::vector<double> data_;
};

// (d*S) x (d*T): row = window_row * S + in, col = window_col * T + out.
Matrix reshape_spatial(const LayerSpec& layer, const KernelTensor& kernel);
KernelTensor unreshape_spatial(const LayerSpec& layer, const Matrix& k);

// (d*d*S) x T: row = (window_row * d + window_col) * S + in, col = out.
Matrix reshape_channel(const LayerSpec& layer, const KernelTensor& kernel);
KernelTensor unreshape_channel(const LayerSpec& layer, const Matrix& k);

// Dispatches on layer.scheme.
Matrix reshape_kernel(const LayerSpec& layer, const KernelTensor& kernel);
KernelTensor unreshape_kernel(const LayerSpec& layer, const Matrix& k);

}  // namespace rankforge

#endif  // RANKFORGE_LOWRANK_HPP_
