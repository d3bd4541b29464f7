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

#include "rankforge/accuracy.hpp"

#include <cmath>
#include <string>

#include "rankforge/error.hpp"

namespace rankforge {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kScore0: return "score0";
    case Stage::kFinetune02: return "finetune02";
    case Stage::kFinetune1: return "finetune1";
    case Stage::kFinal: return "final";
  }
  return "score0";
}

Stage parse_stage(std::string_view s) {
  if (s == "score0") return Stage::kScore0;
  if (s == "finetune02") return Stage::kFinetune02;
  if (s == "finetune1") return Stage::kFinetune1;
  if (s == "final") return Stage::kFinal;
  throw Error(ErrorKind::kInvalidArgument, "unknown stage '" + std::string(s) + "'");
}

double AffineMap::inverse(double y) const {
  if (slope == 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "cannot invert a constant map");
  }
  return (y - intercept) / slope;
}

AffineMap fit_affine(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "affine fit needs at least two (x, y) pairs");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "calibration points are coincident in x");
  }
  AffineMap m;
  m.slope = sxy / sxx;
  m.intercept = my - m.slope * mx;
  return m;
}

AccuracyModel make_accuracy_model(AffineMap to_02, AffineMap to_1,
                                  AffineMap to_final, double mu_star) {
  for (const AffineMap* m : {&to_02, &to_1, &to_final}) {
    if (!(m->slope > 0.0)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "accuracy function slope must be positive");
    }
  }
  AccuracyModel out;
  out.to_02 = to_02;
  out.to_1 = to_1;
  out.to_final = to_final;
  out.target_accuracy = mu_star;
  out.tau_c = to_final.inverse(mu_star);
  out.tau_b = to_1.inverse(out.tau_c);
  out.tau_a = to_02.inverse(out.tau_b);
  return out;
}

AccuracyModel fit_accuracy_model(std::span<const EvalPoint> points,
                                 double mu_star) {
  if (points.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "need at least two calibration points");
  }
  std::vector<double> a0, a02, a1, af;
  for (const auto& p : points) {
    if (!p.acc02 || !p.acc1 || !p.acc_final) {
      throw Error(ErrorKind::kInvalidArgument,
                  "calibration point lacks a fine-tuned accuracy");
    }
    a0.push_back(p.acc0);
    a02.push_back(*p.acc02);
    a1.push_back(*p.acc1);
    af.push_back(*p.acc_final);
  }
  return make_accuracy_model(fit_affine(a0, a02), fit_affine(a02, a1),
                             fit_affine(a1, af), mu_star);
}

AccuracyModel threshold_only_model(double tau) {
  return make_accuracy_model({}, {}, {}, tau);
}

}  // namespace rankforge
