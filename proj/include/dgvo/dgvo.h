/* Copyright 2026 the dgvo authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* dgvo: depth-prior-guided sliding-window visual odometry.
 *
 * Stable C interface to the shared library. All functions return a
 * dgvo_status; on failure a human-readable message is available through
 * dgvo_experiment_error(handle) for handle-bound calls and dgvo_last_error()
 * for the rest. Handles are opaque and must be released with
 * dgvo_experiment_destroy.
 */

#ifndef DGVO_DGVO_H
#define DGVO_DGVO_H

#include <stdint.h>

#if defined(_WIN32)
#define DGVO_API __declspec(dllexport)
#else
#define DGVO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dgvo_status {
  DGVO_OK = 0,
  DGVO_ERROR = 1,          /* internal failure */
  DGVO_CONFIG_ERROR = 2,   /* invalid configuration (field named in message) */
  DGVO_PIPELINE_ERROR = 3, /* run-time failure while processing frames */
} dgvo_status;

typedef struct dgvo_experiment dgvo_experiment;

/* Creates an experiment from a JSON config file / string. On success the
 * handle must be destroyed by the caller; on failure *out is NULL and
 * dgvo_last_error() describes the problem. */
DGVO_API dgvo_status dgvo_experiment_create(const char* config_path,
                                            dgvo_experiment** out);
DGVO_API dgvo_status dgvo_experiment_create_from_string(const char* json_text,
                                                        dgvo_experiment** out);
DGVO_API void dgvo_experiment_destroy(dgvo_experiment* experiment);

/* Overrides applied before dgvo_experiment_run. */
DGVO_API dgvo_status dgvo_experiment_set_seed(dgvo_experiment* experiment,
                                              uint64_t seed);
DGVO_API dgvo_status dgvo_experiment_set_output_dir(dgvo_experiment* experiment,
                                                    const char* dir);

/* Runs the configured experiment (sequence -> pipeline -> metrics) and
 * writes the configured artifacts. */
DGVO_API dgvo_status dgvo_experiment_run(dgvo_experiment* experiment);

/* Scalar results, valid after a successful run. Known names: "ate", "rte",
 * "scale", "max_rot_err_rad", "runtime_s", "n_frames", "n_keyframes",
 * "eta_init". */
DGVO_API dgvo_status dgvo_experiment_get_metric(
    const dgvo_experiment* experiment, const char* name, double* value);

/* Last error message recorded on this handle; empty string if none. */
DGVO_API const char* dgvo_experiment_error(const dgvo_experiment* experiment);

/* Generates the synthetic sequence described by a config file and writes it
 * (images, depth maps, ground-truth trajectory) to out_dir. */
DGVO_API dgvo_status dgvo_generate_sequence(const char* config_path,
                                            const char* out_dir);

/* ATE / RTE / similarity scale between two TUM trajectory files. Any output
 * pointer may be NULL. */
DGVO_API dgvo_status dgvo_trajectory_metrics(const char* estimate_path,
                                             const char* ground_truth_path,
                                             double* ate_m, double* rte_m,
                                             double* scale);

/* Thread-local message for the most recent failure of a handle-less call
 * (or a failed create). */
DGVO_API const char* dgvo_last_error(void);

DGVO_API const char* dgvo_version(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DGVO_DGVO_H */
