// Copyright 2026 the dgvo authors
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

#include "dgvo/dgvo.h"

#include <cstring>
#include <memory>
#include <string>

#include "eval_io.hpp"

using dgvo::Error;
using dgvo::ErrorCode;

struct dgvo_experiment {
  dgvo::ExperimentConfig config;
  std::unique_ptr<dgvo::ExperimentResult> result;
  std::string error;
};

namespace {

thread_local std::string g_last_error;

dgvo_status status_from_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::ParseError:
      return DGVO_CONFIG_ERROR;
    case ErrorCode::PipelineError:
      return DGVO_PIPELINE_ERROR;
    default:
      return DGVO_ERROR;
  }
}

template <typename Fn>
dgvo_status guarded(std::string* sink, Fn&& fn) {
  try {
    fn();
    if (sink != nullptr) sink->clear();
    return DGVO_OK;
  } catch (const Error& e) {
    if (sink != nullptr) *sink = e.what();
    g_last_error = e.what();
    return status_from_code(e.code());
  } catch (const std::exception& e) {
    if (sink != nullptr) *sink = e.what();
    g_last_error = e.what();
    return DGVO_ERROR;
  }
}

}  // namespace

extern "C" {

dgvo_status dgvo_experiment_create(const char* config_path,
                                   dgvo_experiment** out) {
  if (out == nullptr || config_path == nullptr) return DGVO_ERROR;
  *out = nullptr;
  auto handle = std::make_unique<dgvo_experiment>();
  const dgvo_status status = guarded(&handle->error, [&] {
    handle->config = dgvo::load_experiment_config(config_path);
  });
  if (status == DGVO_OK) *out = handle.release();
  return status;
}

dgvo_status dgvo_experiment_create_from_string(const char* json_text,
                                               dgvo_experiment** out) {
  if (out == nullptr || json_text == nullptr) return DGVO_ERROR;
  *out = nullptr;
  auto handle = std::make_unique<dgvo_experiment>();
  const dgvo_status status = guarded(&handle->error, [&] {
    handle->config = dgvo::parse_experiment_config(json_text);
  });
  if (status == DGVO_OK) *out = handle.release();
  return status;
}

void dgvo_experiment_destroy(dgvo_experiment* experiment) {
  delete experiment;
}

dgvo_status dgvo_experiment_set_seed(dgvo_experiment* experiment,
                                     uint64_t seed) {
  if (experiment == nullptr) return DGVO_ERROR;
  experiment->config.pipeline.seed = seed;
  return DGVO_OK;
}

dgvo_status dgvo_experiment_set_output_dir(dgvo_experiment* experiment,
                                           const char* dir) {
  if (experiment == nullptr || dir == nullptr) return DGVO_ERROR;
  experiment->config.output_dir = dir;
  return DGVO_OK;
}

dgvo_status dgvo_experiment_run(dgvo_experiment* experiment) {
  if (experiment == nullptr) return DGVO_ERROR;
  return guarded(&experiment->error, [&] {
    experiment->result = std::make_unique<dgvo::ExperimentResult>(
        dgvo::run_experiment(experiment->config));
  });
}

dgvo_status dgvo_experiment_get_metric(const dgvo_experiment* experiment,
                                       const char* name, double* value) {
  if (experiment == nullptr || name == nullptr || value == nullptr) {
    return DGVO_ERROR;
  }
  if (experiment->result == nullptr) {
    g_last_error = "experiment has not been run";
    return DGVO_ERROR;
  }
  const dgvo::ExperimentResult& r = *experiment->result;
  const std::string key = name;
  if (key == "ate") {
    *value = r.metrics.ate_m;
  } else if (key == "rte") {
    *value = r.metrics.rte_m;
  } else if (key == "scale") {
    *value = r.metrics.scale;
  } else if (key == "max_rot_err_rad") {
    *value = r.metrics.max_rot_err_rad;
  } else if (key == "runtime_s") {
    *value = r.runtime_s;
  } else if (key == "n_frames") {
    *value = static_cast<double>(r.estimate.size());
  } else if (key == "n_keyframes") {
    *value = static_cast<double>(r.pipeline.n_keyframes);
  } else if (key == "eta_init") {
    *value = r.pipeline.gate.eta_init;
  } else {
    g_last_error = "unknown metric '" + key + "'";
    return DGVO_ERROR;
  }
  return DGVO_OK;
}

const char* dgvo_experiment_error(const dgvo_experiment* experiment) {
  return experiment == nullptr ? "" : experiment->error.c_str();
}

dgvo_status dgvo_generate_sequence(const char* config_path,
                                   const char* out_dir) {
  if (config_path == nullptr || out_dir == nullptr) return DGVO_ERROR;
  return guarded(nullptr, [&] {
    const dgvo::ExperimentConfig config =
        dgvo::load_experiment_config(config_path);
    const dgvo::Sequence seq = dgvo::build_sequence(config);
    dgvo::export_sequence(seq, out_dir);
  });
}

dgvo_status dgvo_trajectory_metrics(const char* estimate_path,
                                    const char* ground_truth_path,
                                    double* ate_m, double* rte_m,
                                    double* scale) {
  if (estimate_path == nullptr || ground_truth_path == nullptr) {
    return DGVO_ERROR;
  }
  return guarded(nullptr, [&] {
    const dgvo::Trajectory est =
        dgvo::read_trajectory_tum(estimate_path).trajectory;
    const dgvo::Trajectory gt =
        dgvo::read_trajectory_tum(ground_truth_path).trajectory;
    const dgvo::MetricsReport report = dgvo::evaluate_trajectories(est, gt);
    if (ate_m != nullptr) *ate_m = report.ate_m;
    if (rte_m != nullptr) *rte_m = report.rte_m;
    if (scale != nullptr) *scale = report.scale;
  });
}

const char* dgvo_last_error(void) { return g_last_error.c_str(); }

const char* dgvo_version(void) { return "0.1.0"; }

}  // extern "C"
