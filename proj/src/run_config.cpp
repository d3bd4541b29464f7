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

#include "rankforge/run_config.hpp"

#include <cmath>

#include "json.hpp"
#include "rankforge/error.hpp"

namespace rankforge {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::kInvalidArgument, "config key '" + key + "' has the wrong type");
  }
}

double fraction(const json& j, const std::string& key, bool allow_zero) {
  const auto v = get_as<double>(j, key);
  if (!std::isfinite(v) || v > 1.0 || v < 0.0 || (!allow_zero && v == 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "config key '" + key + "' must be a fraction in (0, 1]");
  }
  return v;
}

std::int64_t non_negative(const json& j, const std::string& key) {
  const auto v = get_as<std::int64_t>(j, key);
  if (v < 0) {
    throw Error(ErrorKind::kInvalidArgument, "config key '" + key + "' must be >= 0");
  }
  return v;
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorKind::kParse, "config is not valid JSON");
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "config must be a JSON object");

  RunConfig c;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "model") {
      c.model = get_as<std::string>(v, k);
    } else if (k == "target") {
      c.target = parse_cost_target(get_as<std::string>(v, k));
    } else if (k == "layers") {
      c.layers = parse_layer_selection(get_as<std::string>(v, k));
    } else if (k == "mu_star") {
      c.mu_star = get_as<double>(v, k);
    } else if (k == "tau_a") {
      c.tau_a = get_as<double>(v, k);
    } else if (k == "tau_b") {
      c.tau_b = get_as<double>(v, k);
    } else if (k == "tau_c") {
      c.tau_c = get_as<double>(v, k);
    } else if (k == "calibration") {
      c.calibration = get_as<std::string>(v, k);
    } else if (k == "delta_s") {
      c.search.delta_s = fraction(v, k, true);
    } else if (k == "delta_m") {
      c.search.delta_m = fraction(v, k, true);
    } else if (k == "delta_r") {
      c.search.delta_r = fraction(v, k, false);
    } else if (k == "sigma") {
      c.search.sigma = non_negative(v, k);
    } else if (k == "delta_c_min") {
      c.search.delta_c_min = non_negative(v, k);
    } else if (k == "n_candidates") {
      c.search.n_candidates = static_cast<std::size_t>(non_negative(v, k));
    } else if (k == "seed") {
      c.search.seed = get_as<std::uint64_t>(v, k);
      c.evaluator.seed = c.search.seed;
    } else if (k == "start") {
      c.search.start = parse_start_point(get_as<std::string>(v, k));
    } else if (k == "max_iterations") {
      c.search.max_iterations = static_cast<std::size_t>(non_negative(v, k));
    } else if (k == "workers") {
      c.search.workers = static_cast<std::size_t>(non_negative(v, k));
    } else if (k == "evaluator") {
      c.evaluator_kind = parse_evaluator_kind(get_as<std::string>(v, k));
    } else if (k == "subset_fraction") {
      c.evaluator.subset_fraction = fraction(v, k, false);
    } else if (k == "evaluator_command") {
      c.evaluator.command = get_as<std::string>(v, k);
    } else if (k == "evaluator_timeout") {
      c.evaluator.timeout_seconds = get_as<double>(v, k);
      if (!(c.evaluator.timeout_seconds > 0.0)) {
        throw Error(ErrorKind::kInvalidArgument, "evaluator_timeout must be positive");
      }
    } else if (k == "evaluator_processes") {
      c.evaluator.processes = static_cast<std::size_t>(non_negative(v, k));
      if (c.evaluator.processes == 0) {
        throw Error(ErrorKind::kInvalidArgument, "evaluator_processes must be >= 1");
      }
    } else if (k == "oracle_exponent") {
      c.evaluator.exponent = get_as<double>(v, k);
    } else if (k == "eval_cache") {
      c.eval_cache = get_as<std::string>(v, k);
    } else if (k == "out") {
      c.out = get_as<std::string>(v, k);
    } else if (k == "stage2") {
      c.stage2 = get_as<bool>(v, k);
    } else {
      throw Error(ErrorKind::kInvalidArgument, "unknown config key '" + k + "'");
    }
  }
  return c;
}

std::string to_json(const RunConfig& c) {
  ojson j;
  j["model"] = c.model;
  j["target"] = to_string(c.target);
  j["layers"] = to_string(c.layers);
  if (c.mu_star) j["mu_star"] = *c.mu_star;
  if (c.tau_a) j["tau_a"] = *c.tau_a;
  if (c.tau_b) j["tau_b"] = *c.tau_b;
  if (c.tau_c) j["tau_c"] = *c.tau_c;
  if (!c.calibration.empty()) j["calibration"] = c.calibration;
  j["delta_s"] = c.search.delta_s;
  j["delta_m"] = c.search.delta_m;
  j["delta_r"] = c.search.delta_r;
  if (c.search.sigma) j["sigma"] = *c.search.sigma;
  if (c.search.delta_c_min) j["delta_c_min"] = *c.search.delta_c_min;
  j["n_candidates"] = c.search.n_candidates;
  j["seed"] = c.search.seed;
  j["start"] = to_string(c.search.start);
  j["max_iterations"] = c.search.max_iterations;
  j["workers"] = c.search.workers;
  if (c.evaluator_kind) j["evaluator"] = to_string(*c.evaluator_kind);
  j["subset_fraction"] = c.evaluator.subset_fraction;
  if (!c.evaluator.command.empty()) j["evaluator_command"] = c.evaluator.command;
  j["evaluator_timeout"] = c.evaluator.timeout_seconds;
  j["evaluator_processes"] = c.evaluator.processes;
  j["oracle_exponent"] = c.evaluator.exponent;
  if (!c.eval_cache.empty()) j["eval_cache"] = c.eval_cache;
  j["out"] = c.out;
  j["stage2"] = c.stage2;
  return j.dump(2);
}

}  // namespace rankforge
