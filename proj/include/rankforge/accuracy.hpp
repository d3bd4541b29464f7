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

#ifndef RANKFORGE_ACCURACY_HPP_
#define RANKFORGE_ACCURACY_HPP_

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rankforge {

// Training progress at which an accuracy is measured.
enum class Stage { kScore0, kFinetune02, kFinetune1, kFinal };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view s);

struct AffineMap {
  double slope = 1.0;
  double intercept = 0.0;

  double operator()(double x) const { return slope * x + intercept; }
  // Throws Error(kInvalidArgument) for a zero slope.
  double inverse(double y) const;
};

// Least-squares line through (xs[i], ys[i]); exact for two points.
// Throws Error(kInvalidArgument) if the xs are all equal.
AffineMap fit_affine(std::span<const double> xs, std::span<const double> ys);

// Accuracies of one calibration model at 0, 0.2, 1 and final epochs.
struct EvalPoint {
  double acc0 = 0.0;
  std::optional<double> acc02;
  std::optional<double> acc1;
  std::optional<double> acc_final;
};

// Chain acc0 -> acc02 -> acc1 -> final, and the thresholds obtained by
// inverting it from the target accuracy.
struct AccuracyModel {
  AffineMap to_02;     // score0 accuracy to 0.2-epoch accuracy
  AffineMap to_1;      // 0.2-epoch to 1-epoch
  AffineMap to_final;  // 1-epoch to final
  double tau_a = 0.0;
  double tau_b = 0.0;
  double tau_c = 0.0;
  double target_accuracy = 0.0;

  double predict_final(double acc0) const {
    return to_final(to_1(to_02(acc0)));
  }
};

// Thresholds from fixed maps: tau_c = to_final^-1(mu), tau_b = to_1^-1(tau_c),
// tau_a = to_02^-1(tau_b).
AccuracyModel make_accuracy_model(AffineMap to_02, AffineMap to_1,
                                  AffineMap to_final, double mu_star);

// Requires >= 2 points with all four accuracies and distinct acc0.
// Throws Error(kInvalidArgument) on coincident points or a fitted slope <= 0.
AccuracyModel fit_accuracy_model(std::span<const EvalPoint> points,
                                 double mu_star);

// Model whose thresholds are all `tau` (identity chain).
AccuracyModel threshold_only_model(double tau);

}  // namespace rankforge

#endif  // RANKFORGE_ACCURACY_HPP_
