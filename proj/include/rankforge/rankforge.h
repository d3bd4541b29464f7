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

/* C interface to the rank selection library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every fallible call returns an rf_status; on failure rf_last_error()
 * describes the problem (thread-local, valid until the next call on the same
 * thread). Strings returned through char** out-parameters are heap allocated
 * and must be released with rf_string_free. Run configuration is passed as a
 * JSON object whose keys mirror the CLI flags.
 */
#ifndef RANKFORGE_RANKFORGE_H_
#define RANKFORGE_RANKFORGE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(RANKFORGE_BUILDING_LIBRARY)
#define RF_API __attribute__((visibility("default")))
#else
#define RF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rf_status {
  RF_OK = 0,
  RF_ERR_PARSE = 1,
  RF_ERR_VALIDATION = 2,
  RF_ERR_IO = 3,
  RF_ERR_EVALUATOR = 4,
  RF_ERR_INVALID_ARGUMENT = 5,
  RF_ERR_INFEASIBLE = 6,
  RF_ERR_INTERNAL = 7
} rf_status;

typedef enum rf_cost_target {
  RF_TARGET_PARAMETERS = 0,
  RF_TARGET_OPERATIONS = 1
} rf_cost_target;

typedef struct rf_model rf_model;

typedef struct rf_layer_info {
  const char* name; /* owned by the model handle */
  int kind;         /* 0 convolutional, 1 fully connected */
  int scheme;       /* 0 spatial, 1 channel */
  int64_t window;
  int64_t in_channels;
  int64_t out_channels;
  int64_t out1_h, out1_w, out2_h, out2_w;
  int has_weights;
} rf_layer_info;

typedef struct rf_search_outcome {
  size_t accepted;
  int64_t final_cost;
  int stage2_run;
  int fallback; /* stage 2 found no passing set; the half-cost model was used */
} rf_search_outcome;

RF_API const char* rf_version(void);
RF_API const char* rf_last_error(void);
RF_API void rf_string_free(char* s);

RF_API rf_status rf_model_load(const char* path, rf_model** out);
RF_API rf_status rf_model_save(const rf_model* model, const char* path);
RF_API void rf_model_free(rf_model* model);
RF_API size_t rf_model_layer_count(const rf_model* model);
RF_API rf_status rf_model_layer_info(const rf_model* model, size_t index,
                                     rf_layer_info* out);

/* Cost arithmetic for a single layer of a loaded model. */
RF_API rf_status rf_layer_cost(const rf_model* model, size_t index,
                               int64_t rank, rf_cost_target target,
                               int64_t* out);
RF_API rf_status rf_layer_max_rank(const rf_model* model, size_t index,
                                   int64_t* out);

/* Search-space summary as a JSON document. */
RF_API rf_status rf_plan(const rf_model* model, const char* config_json,
                         char** out_json);

/* Stage 1 (and stage 2 when the config sets "stage2": true). Output files go
 * to the config's "out" directory. */
RF_API rf_status rf_search(const rf_model* model, const char* config_json,
                           rf_search_outcome* out);

/* Stage 2 over the trace and accuracy model found in the "out" directory. */
RF_API rf_status rf_stage2(const rf_model* model, const char* config_json,
                           rf_search_outcome* out);

RF_API rf_status rf_decompose(const rf_model* model, const char* ranks_path,
                              const char* out_path);

/* model may be NULL; layers.csv is only written when it is not. */
RF_API rf_status rf_report(const char* trace_path, const char* out_dir,
                           const rf_model* model);

#ifdef __cplusplus
}
#endif

#endif /* RANKFORGE_RANKFORGE_H_ */
