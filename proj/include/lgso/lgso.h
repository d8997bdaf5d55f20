// Copyright 2026 The LGSO Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the lgso library. All functions are thread-safe with respect
 * to distinct handles; error text is kept per thread. */
#ifndef LGSO_LGSO_H_
#define LGSO_LGSO_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LGSO_API __declspec(dllexport)
#else
#define LGSO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lgso_status {
  LGSO_OK = 0,
  LGSO_CONFIG_ERROR = 1,     /* bad config, bad input file */
  LGSO_RUNTIME_ERROR = 2,    /* numerical or I/O failure during a run */
  LGSO_BUDGET_EXHAUSTED = 3, /* run stopped at the call budget; outputs are complete */
  LGSO_INVALID_ARGUMENT = 4, /* null handle, index out of range */
  LGSO_BUFFER_TOO_SMALL = 5
} lgso_status;

typedef struct lgso_config lgso_config;
typedef struct lgso_result lgso_result;

LGSO_API const char* lgso_version(void);
/* Message of the last failed call on this thread, "" if none. */
LGSO_API const char* lgso_last_error(void);
LGSO_API const char* lgso_status_string(lgso_status status);

LGSO_API size_t lgso_problem_count(void);
/* NULL when index is out of range. */
LGSO_API const char* lgso_problem_id(size_t index);

/* Configs. Text is "key = value" lines with optional [section] headers. */
LGSO_API lgso_status lgso_config_load(const char* path, lgso_config** out);
LGSO_API lgso_status lgso_config_parse(const char* text, lgso_config** out);
/* Applies "key=value" on top of the current settings. */
LGSO_API lgso_status lgso_config_set(lgso_config* config, const char* assignment);
/* String getters copy into buf (NUL-terminated) and report the size needed,
 * terminator included, through needed (may be NULL). */
LGSO_API lgso_status lgso_config_get(const lgso_config* config, const char* key, char* buf, size_t size,
                                     size_t* needed);
LGSO_API lgso_status lgso_config_serialize(const lgso_config* config, char* buf, size_t size, size_t* needed);
LGSO_API lgso_status lgso_config_hash(const lgso_config* config, uint64_t* out);
LGSO_API lgso_status lgso_config_validate(const lgso_config* config);
LGSO_API void lgso_config_free(lgso_config* config);

/* Called after every optimizer iteration. */
typedef void (*lgso_progress_fn)(uint64_t iteration, uint64_t calls, double objective, void* user);

/* Runs the configured method and writes trace.csv, summary.txt and plot.csv.
 * *out is set whenever the run produced a trace, including budget stops and
 * surrogate training failures. */
LGSO_API lgso_status lgso_run(const lgso_config* config, lgso_progress_fn progress, void* user, lgso_result** out);
LGSO_API size_t lgso_result_iterations(const lgso_result* result);
LGSO_API uint64_t lgso_result_calls(const lgso_result* result);
LGSO_API double lgso_result_final_objective(const lgso_result* result);
LGSO_API double lgso_result_wall_seconds(const lgso_result* result);
LGSO_API size_t lgso_result_dim(const lgso_result* result);
/* Copies min(n, dim) components. */
LGSO_API lgso_status lgso_result_final_psi(const lgso_result* result, double* psi, size_t n);
/* "max_iterations", "converged", "budget_exhausted" or "failed". */
LGSO_API const char* lgso_result_stop_reason(const lgso_result* result);
LGSO_API const char* lgso_result_output_dir(const lgso_result* result);
LGSO_API void lgso_result_free(lgso_result* result);

/* Gradient bias report; writes bias_report.csv and bias_samples.csv. */
LGSO_API lgso_status lgso_bias(const lgso_config* config, size_t* points);

typedef void (*lgso_cell_fn)(size_t index, double final_objective, const char* error, void* user);
/* Grid sweep; writes sweep.csv. */
LGSO_API lgso_status lgso_sweep(const lgso_config* config, lgso_cell_fn on_cell, void* user, size_t* rows);

/* Merges traces on a shared call grid into out_path. */
LGSO_API lgso_status lgso_compare(const char* const* traces, size_t count, const char* out_path, size_t* rows);

#ifdef __cplusplus
}
#endif

#endif /* LGSO_LGSO_H_ */
