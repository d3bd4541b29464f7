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

// Command-line driver. Talks to the library only through the C interface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rankforge/rankforge.h"

namespace {

using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitValidation = 2;
constexpr int kExitFallback = 3;
constexpr int kExitEvaluator = 4;

enum class ValueType { kString, kNumber, kInteger };

struct FlagSpec {
  const char* flag;
  const char* key;
  ValueType type;
  const char* help;
};

// Flags shared by the commands that build a run configuration.
const std::vector<FlagSpec> kRunFlags = {
    {"--model", "model", ValueType::kString, "model description (JSON)"},
    {"--target", "target", ValueType::kString, "parameters | operations"},
    {"--layers", "layers", ValueType::kString, "all | conv_only"},
    {"--mu-star", "mu_star", ValueType::kNumber, "target final accuracy"},
    {"--tau-a", "tau_a", ValueType::kNumber, "score threshold override"},
    {"--tau-b", "tau_b", ValueType::kNumber, "0.2-epoch threshold override"},
    {"--tau-c", "tau_c", ValueType::kNumber, "1-epoch threshold override"},
    {"--calibration", "calibration", ValueType::kString, "calibration points file"},
    {"--delta-s", "delta_s", ValueType::kNumber, "step as a fraction of max rank"},
    {"--delta-m", "delta_m", ValueType::kNumber, "min rank as a fraction of max rank"},
    {"--delta-r", "delta_r", ValueType::kNumber, "initial reduction fraction"},
    {"--sigma", "sigma", ValueType::kInteger, "cost margin"},
    {"--delta-c-min", "delta_c_min", ValueType::kInteger, "termination granularity"},
    {"--n-candidates", "n_candidates", ValueType::kInteger, "candidates per iteration"},
    {"--seed", "seed", ValueType::kInteger, "random seed"},
    {"--start", "start", ValueType::kString, "max | half-cost"},
    {"--max-iterations", "max_iterations", ValueType::kInteger, "iteration cap"},
    {"--workers", "workers", ValueType::kInteger, "scoring threads (0 = auto)"},
    {"--evaluator", "evaluator", ValueType::kString, "external | pca | synthetic"},
    {"--subset-fraction", "subset_fraction", ValueType::kNumber,
     "validation subset fraction"},
    {"--evaluator-command", "evaluator_command", ValueType::kString,
     "evaluator command line"},
    {"--evaluator-timeout", "evaluator_timeout", ValueType::kNumber,
     "per-call timeout in seconds"},
    {"--evaluator-processes", "evaluator_processes", ValueType::kInteger,
     "evaluator processes"},
    {"--oracle-exponent", "oracle_exponent", ValueType::kNumber,
     "synthetic oracle exponent"},
    {"--eval-cache", "eval_cache", ValueType::kString, "evaluation journal or none"},
    {"--out", "out", ValueType::kString, "output directory"},
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class RunOptions {
 public:
  void attach(CLI::App* app) {
    app->add_option("--config", config_path_, "JSON config file");
    for (const auto& f : kRunFlags) {
      values_[f.key] = std::string();
      options_[f.key] = app->add_option(f.flag, values_[f.key], f.help);
    }
  }

  // File keys first, then every flag given on the command line.
  json build(bool stage2) const {
    json cfg = json::object();
    if (!config_path_.empty()) {
      std::ifstream in(config_path_);
      if (!in) throw UsageError("cannot read config " + config_path_);
      cfg = json::parse(in, nullptr, false);
      if (cfg.is_discarded() || !cfg.is_object()) {
        throw UsageError(config_path_ + " is not a JSON object");
      }
    }
    for (const auto& f : kRunFlags) {
      if (options_.at(f.key)->count() == 0) continue;
      const std::string& v = values_.at(f.key);
      if (f.type == ValueType::kString) {
        cfg[f.key] = v;
        continue;
      }
      json n = json::parse(v, nullptr, false);
      if (n.is_discarded() || !n.is_number() ||
          (f.type == ValueType::kInteger && !n.is_number_integer())) {
        throw UsageError(std::string(f.flag) + ": '" + v + "' is not a valid number");
      }
      cfg[f.key] = n;
    }
    if (stage2) cfg["stage2"] = true;
    return cfg;
  }

 private:
  std::string config_path_;
  std::map<std::string, std::string> values_;
  std::map<std::string, CLI::Option*> options_;
};

int exit_code(rf_status status) {
  switch (status) {
    case RF_OK: return kExitOk;
    case RF_ERR_PARSE:
    case RF_ERR_VALIDATION:
    case RF_ERR_INVALID_ARGUMENT: return kExitValidation;
    case RF_ERR_EVALUATOR: return kExitEvaluator;
    default: return kExitOther;
  }
}

int fail(rf_status status) {
  std::cerr << "error: " << rf_last_error() << '\n';
  return exit_code(status);
}

struct ModelHandle {
  rf_model* ptr = nullptr;
  ~ModelHandle() { rf_model_free(ptr); }
};

// Returns 0 on success, else the exit code to use.
int open_model(const json& cfg, ModelHandle& h) {
  const std::string path = cfg.contains("model") && cfg["model"].is_string()
                               ? cfg["model"].get<std::string>()
                               : std::string();
  if (path.empty()) {
    std::cerr << "error: no model given (--model or \"model\" in the config)\n";
    return kExitValidation;
  }
  if (auto s = rf_model_load(path.c_str(), &h.ptr); s != RF_OK) return fail(s);
  return kExitOk;
}

int cmd_plan(const json& cfg, bool as_json) {
  ModelHandle m;
  if (int code = open_model(cfg, m)) return code;
  char* text = nullptr;
  if (auto s = rf_plan(m.ptr, cfg.dump().c_str(), &text); s != RF_OK) return fail(s);
  const std::string doc_text = text;
  rf_string_free(text);
  if (as_json) {
    std::cout << doc_text << '\n';
    return kExitOk;
  }
  const json doc = json::parse(doc_text);
  std::printf("%-12s %-8s %9s %9s %6s %14s\n", "layer", "scheme", "max_rank",
              "min_rank", "step", "unit_cost");
  for (const auto& r : doc["layers"]) {
    std::printf("%-12s %-8s %9lld %9lld %6lld %14lld\n",
                r["layer"].get<std::string>().c_str(),
                r["scheme"].get<std::string>().c_str(),
                static_cast<long long>(r["max_rank"].get<std::int64_t>()),
                static_cast<long long>(r["min_rank"].get<std::int64_t>()),
                static_cast<long long>(r["step"].get<std::int64_t>()),
                static_cast<long long>(r["unit_cost"].get<std::int64_t>()));
  }
  std::printf("layers          %zu\n", doc["layers"].size());
  std::printf("target          %s\n", doc["target"].get<std::string>().c_str());
  for (const char* k : {"c_max", "fixed_cost", "delta_c0", "delta_c_min", "sigma",
                        "original_total"}) {
    std::printf("%-15s %lld\n", k, static_cast<long long>(doc[k].get<std::int64_t>()));
  }
  return kExitOk;
}

int report_outcome(const rf_search_outcome& o, const json& cfg) {
  const std::string out = cfg.value("out", std::string("."));
  std::printf("accepted sets   %zu\n", o.accepted);
  std::printf("final cost      %lld\n", static_cast<long long>(o.final_cost));
  if (o.stage2_run) std::printf("stage 2         %s\n", o.fallback ? "fallback" : "passed");
  std::printf("ranks           %s/final_ranks.json\n", out.c_str());
  return o.fallback ? kExitFallback : kExitOk;
}

int cmd_search(const json& cfg) {
  ModelHandle m;
  if (int code = open_model(cfg, m)) return code;
  rf_search_outcome o{};
  if (auto s = rf_search(m.ptr, cfg.dump().c_str(), &o); s != RF_OK) return fail(s);
  return report_outcome(o, cfg);
}

int cmd_stage2(const json& cfg) {
  ModelHandle m;
  if (int code = open_model(cfg, m)) return code;
  rf_search_outcome o{};
  if (auto s = rf_stage2(m.ptr, cfg.dump().c_str(), &o); s != RF_OK) return fail(s);
  return report_outcome(o, cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-wise rank selection for low-rank decomposed CNNs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rf_version()));

  auto* plan = app.add_subcommand("plan", "print the per-layer search space");
  RunOptions plan_opts;
  plan_opts.attach(plan);
  bool plan_json = false;
  plan->add_flag("--json", plan_json, "print JSON instead of a table");

  auto* search = app.add_subcommand("search", "run the rank search");
  RunOptions search_opts;
  search_opts.attach(search);
  bool stage2_flag = false;
  search->add_flag("--stage2", stage2_flag, "also run the fine-tuning checks");

  auto* stage2 = app.add_subcommand("stage2", "run the fine-tuning checks on a trace");
  RunOptions stage2_opts;
  stage2_opts.attach(stage2);

  auto* decompose = app.add_subcommand("decompose", "write the decomposed model");
  std::string dec_model, dec_ranks, dec_out;
  decompose->add_option("--model", dec_model, "model description")->required();
  decompose->add_option("--ranks", dec_ranks, "rank file (default: max ranks)");
  decompose->add_option("--out", dec_out, "output model path")->required();

  auto* report = app.add_subcommand("report", "write CSV series from a trace");
  std::string rep_trace, rep_out = ".", rep_model;
  report->add_option("--trace", rep_trace, "trace file")->required();
  report->add_option("--out", rep_out, "output directory");
  report->add_option("--model", rep_model, "model for the per-layer table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (plan->parsed()) return cmd_plan(plan_opts.build(false), plan_json);
    if (search->parsed()) return cmd_search(search_opts.build(stage2_flag));
    if (stage2->parsed()) return cmd_stage2(stage2_opts.build(false));
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  if (decompose->parsed()) {
    ModelHandle m;
    if (auto s = rf_model_load(dec_model.c_str(), &m.ptr); s != RF_OK) return fail(s);
    const auto s = rf_decompose(m.ptr, dec_ranks.empty() ? nullptr : dec_ranks.c_str(),
                                dec_out.c_str());
    if (s != RF_OK) return fail(s);
    std::printf("wrote %s\n", dec_out.c_str());
    return kExitOk;
  }
  if (report->parsed()) {
    ModelHandle m;
    if (!rep_model.empty()) {
      if (auto s = rf_model_load(rep_model.c_str(), &m.ptr); s != RF_OK) return fail(s);
    }
    if (auto s = rf_report(rep_trace.c_str(), rep_out.c_str(), m.ptr); s != RF_OK) {
      return fail(s);
    }
    std::printf("wrote %s/iterations.csv and %s/accepted.csv\n", rep_out.c_str(),
                rep_out.c_str());
    return kExitOk;
  }
  return kExitOther;
}
