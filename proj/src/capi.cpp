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

#include "rankforge/rankforge.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "rankforge/cost.hpp"
#include "rankforge/error.hpp"
#include "rankforge/model.hpp"
#include "rankforge/pipeline.hpp"
#include "rankforge/run_config.hpp"

struct rf_model {
  rankforge::NetworkModel model;
};

namespace {

thread_local std::string g_last_error;

rf_status to_status(rankforge::ErrorKind kind) {
  using rankforge::ErrorKind;
  switch (kind) {
    case ErrorKind::kParse: return RF_ERR_PARSE;
    case ErrorKind::kValidation: return RF_ERR_VALIDATION;
    case ErrorKind::kIo: return RF_ERR_IO;
    case ErrorKind::kEvaluator: return RF_ERR_EVALUATOR;
    case ErrorKind::kInvalidArgument: return RF_ERR_INVALID_ARGUMENT;
    case ErrorKind::kInfeasible: return RF_ERR_INFEASIBLE;
  }
  return RF_ERR_INTERNAL;
}

template <typename Fn>
rf_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return RF_OK;
  } catch (const rankforge::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return RF_ERR_INTERNAL;
}

rf_status null_argument(const char* what) {
  g_last_error = std::string(what) + " must not be NULL";
  return RF_ERR_INVALID_ARGUMENT;
}

rankforge::RunConfig config_from(const char* config_json) {
  return rankforge::parse_run_config(config_json ? config_json : "{}");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void fill_outcome(const rankforge::SearchOutcome& o, rf_search_outcome* out) {
  if (!out) return;
  out->accepted = o.accepted;
  out->final_cost = o.final_cost;
  out->stage2_run = o.stage2_run ? 1 : 0;
  out->fallback = o.fallback ? 1 : 0;
}

}  // namespace

extern "C" {

const char* rf_version(void) { return "0.1.0"; }

const char* rf_last_error(void) { return g_last_error.c_str(); }

void rf_string_free(char* s) { std::free(s); }

rf_status rf_model_load(const char* path, rf_model** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto* m = new rf_model{rankforge::load_model(path)};
    *out = m;
  });
}

rf_status rf_model_save(const rf_model* model, const char* path) {
  if (!model) return null_argument("model");
  if (!path) return null_argument("path");
  return guarded([&] { rankforge::save_model(model->model, path); });
}

void rf_model_free(rf_model* model) { delete model; }

size_t rf_model_layer_count(const rf_model* model) {
  return model ? model->model.layers.size() : 0;
}

rf_status rf_model_layer_info(const rf_model* model, size_t index,
                              rf_layer_info* out) {
  if (!model) return null_argument("model");
  if (!out) return null_argument("out");
  if (index >= model->model.layers.size()) {
    g_last_error = "layer index out of range";
    return RF_ERR_INVALID_ARGUMENT;
  }
  const auto& l = model->model.layers[index];
  out->name = l.name.c_str();
  out->kind = l.kind == rankforge::LayerKind::kConvolutional ? 0 : 1;
  out->scheme = l.scheme == rankforge::Scheme::kSpatial ? 0 : 1;
  out->window = l.window;
  out->in_channels = l.in_channels;
  out->out_channels = l.out_channels;
  out->out1_h = l.out1_h;
  out->out1_w = l.out1_w;
  out->out2_h = l.out2_h;
  out->out2_w = l.out2_w;
  out->has_weights = model->model.has_weights(index) ? 1 : 0;
  return RF_OK;
}

rf_status rf_layer_cost(const rf_model* model, size_t index, int64_t rank,
                        rf_cost_target target, int64_t* out) {
  if (!model) return null_argument("model");
  if (!out) return null_argument("out");
  if (index >= model->model.layers.size()) {
    g_last_error = "layer index out of range";
    return RF_ERR_INVALID_ARGUMENT;
  }
  if (rank < 0) {
    g_last_error = "rank must be non-negative";
    return RF_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    *out = rankforge::layer_cost(model->model.layers[index], rank,
                                 target == RF_TARGET_PARAMETERS
                                     ? rankforge::CostTarget::kParameters
                                     : rankforge::CostTarget::kOperations);
  });
}

rf_status rf_layer_max_rank(const rf_model* model, size_t index, int64_t* out) {
  if (!model) return null_argument("model");
  if (!out) return null_argument("out");
  if (index >= model->model.layers.size()) {
    g_last_error = "layer index out of range";
    return RF_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { *out = rankforge::max_rank(model->model.layers[index]); });
}

rf_status rf_plan(const rf_model* model, const char* config_json,
                  char** out_json) {
  if (!model) return null_argument("model");
  if (!out_json) return null_argument("out_json");
  *out_json = nullptr;
  return guarded([&] {
    const auto summary = rankforge::plan(model->model, config_from(config_json));
    *out_json = copy_string(rankforge::to_json(summary));
  });
}

rf_status rf_search(const rf_model* model, const char* config_json,
                    rf_search_outcome* out) {
  if (!model) return null_argument("model");
  return guarded([&] {
    fill_outcome(rankforge::run_search(model->model, config_from(config_json)), out);
  });
}

rf_status rf_stage2(const rf_model* model, const char* config_json,
                    rf_search_outcome* out) {
  if (!model) return null_argument("model");
  return guarded([&] {
    fill_outcome(
        rankforge::run_stage2_from_files(model->model, config_from(config_json)),
        out);
  });
}

rf_status rf_decompose(const rf_model* model, const char* ranks_path,
                       const char* out_path) {
  if (!model) return null_argument("model");
  if (!out_path) return null_argument("out_path");
  return guarded([&] {
    rankforge::NamedRanks ranks;
    if (ranks_path) ranks = rankforge::read_rank_file(ranks_path);
    rankforge::decompose_model(model->model, ranks, out_path);
  });
}

rf_status rf_report(const char* trace_path, const char* out_dir,
                    const rf_model* model) {
  if (!trace_path) return null_argument("trace_path");
  if (!out_dir) return null_argument("out_dir");
  return guarded([&] {
    rankforge::write_report(trace_path, out_dir, model ? &model->model : nullptr);
  });
}

}  // extern "C"
