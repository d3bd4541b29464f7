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

#include "rankforge/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rankforge/error.hpp"

namespace rankforge {
namespace {

// Hestenes iteration on the columns of `w` (m x n, m >= n). On return the
// columns of w are mutually orthogonal and w = A * v.
void orthogonalize_columns(Matrix& w, Matrix& v, const SvdOptions& options) {
  const Eigen::Index n = w.cols();
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= options.tolerance * std::sqrt(alpha * beta)) {
          continue;
        }
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
          const double wp = w(i, p);
          const double wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) return;
  }
}

// Replaces column j of u (whose singular value is negligible) by a unit
// vector orthogonal to all columns in `fixed`.
void complete_column(Matrix& u, Eigen::Index j,
                     const std::vector<Eigen::Index>& fixed) {
  const Eigen::Index m = u.rows();
  for (Eigen::Index e = 0; e < m; ++e) {
    Vector cand = Vector::Zero(m);
    cand(e) = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k : fixed) cand -= u.col(k).dot(cand) * u.col(k);
    }
    const double norm = cand.norm();
    if (norm > 0.5) {
      u.col(j) = cand / norm;
      return;
    }
  }
}

SvdResult svd_tall(const Matrix& a, const SvdOptions& options) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  Matrix w = a;
  Matrix v = Matrix::Identity(n, n);
  orthogonalize_columns(w, v, options);

  Vector norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms(j) = w.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return norms(x) > norms(y);
  });

  SvdResult out;
  out.u.resize(m, n);
  out.v.resize(n, n);
  out.singular_values.resize(n);
  const double largest = n > 0 ? norms(order[0]) : 0.0;
  const double negligible = largest * std::numeric_limits<double>::epsilon() *
                            static_cast<double>(std::max(m, n));
  std::vector<Eigen::Index> good;
  std::vector<Eigen::Index> deficient;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    const double sigma = norms(src);
    out.singular_values(j) = sigma;
    out.v.col(j) = v.col(src);
    if (sigma > negligible && sigma > 0.0) {
      out.u.col(j) = w.col(src) / sigma;
      good.push_back(j);
    } else {
      out.u.col(j).setZero();
      deficient.push_back(j);
    }
  }
  for (Eigen::Index j : deficient) {
    complete_column(out.u, j, good);
    good.push_back(j);
  }
  return out;
}

}  // namespace

SvdResult svd(const Matrix& k, const SvdOptions& options) {
  if (k.rows() < 1 || k.cols() < 1) {
    throw Error(ErrorKind::kInvalidArgument, "svd: empty matrix");
  }
  if (!k.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "svd: non-finite entries");
  }
  if (k.rows() >= k.cols()) return svd_tall(k, options);
  SvdResult t = svd_tall(k.transpose(), options);
  std::swap(t.u, t.v);
  return t;
}

double tail_energy(const Vector& singular_values, Rank rank) {
  double sum = 0.0;
  for (Eigen::Index i = std::max<Rank>(rank, 0); i < singular_values.size(); ++i) {
    sum += singular_values(i) * singular_values(i);
  }
  return sum;
}

DecomposedLayer decompose(const SvdResult& f, Rank rank, Scheme scheme) {
  const auto k = f.singular_values.size();
  if (rank < 1 || rank > k) {
    std::ostringstream msg;
    msg << "decompose: rank " << rank << " outside [1, " << k << "]";
    throw Error(ErrorKind::kInvalidArgument, msg.str());
  }
  const Vector root = f.singular_values.head(rank).cwiseSqrt();
  DecomposedLayer out;
  out.rank = rank;
  out.scheme = scheme;
  out.first = f.u.leftCols(rank) * root.asDiagonal();
  out.second = root.asDiagonal() * f.v.leftCols(rank).transpose();
  return out;
}

DecomposedLayer decompose(const Matrix& k, Rank rank, Scheme scheme) {
  if (rank < 1 || rank > std::min(k.rows(), k.cols())) {
    std::ostringstream msg;
    msg << "decompose: rank " << rank << " outside [1, "
        << std::min(k.rows(), k.cols()) << "]";
    throw Error(ErrorKind::kInvalidArgument, msg.str());
  }
  return decompose(svd(k), rank, scheme);
}

KernelTensor::KernelTensor(std::int64_t window, std::int64_t in_channels,
                           std::int64_t out_channels)
    : window_(window),
      in_(in_channels),
      out_(out_channels),
      data_(static_cast<std::size_t>(window * window * in_channels *
                                     out_channels)) {}

namespace {

void check_tensor(const LayerSpec& layer, const KernelTensor& kernel) {
  if (kernel.window() != layer.window ||
      kernel.in_channels() != layer.in_channels ||
      kernel.out_channels() != layer.out_channels) {
    std::ostringstream msg;
    msg << "layer '" << layer.name << "': kernel tensor is (" << kernel.window()
        << "," << kernel.window() << "," << kernel.in_channels() << ","
        << kernel.out_channels() << "), expected (" << layer.window << ","
        << layer.window << "," << layer.in_channels << ","
        << layer.out_channels << ")";
    throw Error(ErrorKind::kInvalidArgument, msg.str());
  }
}

void check_matrix(const LayerSpec& layer, const Matrix& k, std::int64_t rows,
                  std::int64_t cols) {
  if (k.rows() != rows || k.cols() != cols) {
    std::ostringstream msg;
    msg << "layer '" << layer.name << "': matrix is " << k.rows() << "x"
        << k.cols() << ", expected " << rows << "x" << cols;
    throw Error(ErrorKind::kInvalidArgument, msg.str());
  }
}

}  // namespace

Matrix reshape_spatial(const LayerSpec& layer, const KernelTensor& kernel) {
  check_tensor(layer, kernel);
  const auto d = layer.window, s_n = layer.in_channels, t_n = layer.out_channels;
  Matrix k(d * s_n, d * t_n);
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = 0; j < d; ++j)
      for (std::int64_t s = 0; s < s_n; ++s)
        for (std::int64_t t = 0; t < t_n; ++t)
          k(i * s_n + s, j * t_n + t) = kernel.at(i, j, s, t);
  return k;
}

KernelTensor unreshape_spatial(const LayerSpec& layer, const Matrix& k) {
  const auto d = layer.window, s_n = layer.in_channels, t_n = layer.out_channels;
  check_matrix(layer, k, d * s_n, d * t_n);
  KernelTensor out(d, s_n, t_n);
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = 0; j < d; ++j)
      for (std::int64_t s = 0; s < s_n; ++s)
        for (std::int64_t t = 0; t < t_n; ++t)
          out.at(i, j, s, t) = k(i * s_n + s, j * t_n + t);
  return out;
}

Matrix reshape_channel(const LayerSpec& layer, const KernelTensor& kernel) {
  check_tensor(layer, kernel);
  const auto d = layer.window, s_n = layer.in_channels, t_n = layer.out_channels;
  Matrix k(d * d * s_n, t_n);
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = 0; j < d; ++j)
      for (std::int64_t s = 0; s < s_n; ++s)
        for (std::int64_t t = 0; t < t_n; ++t)
          k((i * d + j) * s_n + s, t) = kernel.at(i, j, s, t);
  return k;
}

KernelTensor unreshape_channel(const LayerSpec& layer, const Matrix& k) {
  const auto d = layer.window, s_n = layer.in_channels, t_n = layer.out_channels;
  check_matrix(layer, k, d * d * s_n, t_n);
  KernelTensor out(d, s_n, t_n);
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = 0; j < d; ++j)
      for (std::int64_t s = 0; s < s_n; ++s)
        for (std::int64_t t = 0; t < t_n; ++t)
          out.at(i, j, s, t) = k((i * d + j) * s_n + s, t);
  return out;
}

Matrix reshape_kernel(const LayerSpec& layer, const KernelTensor& kernel) {
  return layer.scheme == Scheme::kSpatial ? reshape_spatial(layer, kernel)
                                          : reshape_channel(layer, kernel);
}

KernelTensor unreshape_kernel(const LayerSpec& layer, const Matrix& k) {
  return layer.scheme == Scheme::kSpatial ? unreshape_spatial(layer, k)
                                          : unreshape_channel(layer, k);
}

}  // namespace rankforge
