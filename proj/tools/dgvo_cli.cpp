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

// Experiment driver for the dgvo shared library. Talks to the library only
// through the public C interface.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "dgvo/dgvo.h"

namespace {

int exit_code(dgvo_status status) {
  switch (status) {
    case DGVO_OK:
      return 0;
    case DGVO_CONFIG_ERROR:
      return 2;
    case DGVO_PIPELINE_ERROR:
      return 3;
    default:
      return 1;
  }
}

int cmd_run(const std::string& config_path, bool has_seed, uint64_t seed,
            const std::string& output_dir) {
  dgvo_experiment* experiment = nullptr;
  dgvo_status status = dgvo_experiment_create(config_path.c_str(), &experiment);
  if (status != DGVO_OK) {
    std::fprintf(stderr, "error: %s\n", dgvo_last_error());
    return exit_code(status);
  }
  if (has_seed) dgvo_experiment_set_seed(experiment, seed);
  if (!output_dir.empty()) {
    dgvo_experiment_set_output_dir(experiment, output_dir.c_str());
  }

  status = dgvo_experiment_run(experiment);
  if (status != DGVO_OK) {
    std::fprintf(stderr, "error: %s\n", dgvo_experiment_error(experiment));
    dgvo_experiment_destroy(experiment);
    return exit_code(status);
  }

  const char* keys[] = {"ate",       "rte",         "scale",
                        "max_rot_err_rad", "runtime_s", "n_frames",
                        "n_keyframes"};
  for (const char* key : keys) {
    double value = 0.0;
    if (dgvo_experiment_get_metric(experiment, key, &value) == DGVO_OK) {
      std::printf("%s %.9g\n", key, value);
    }
  }
  dgvo_experiment_destroy(experiment);
  return 0;
}

int cmd_metrics(const std::string& est_path, const std::string& gt_path) {
  double ate = 0.0, rte = 0.0, scale = 0.0;
  const dgvo_status status =
      dgvo_trajectory_metrics(est_path.c_str(), gt_path.c_str(), &ate, &rte,
                              &scale);
  if (status != DGVO_OK) {
    std::fprintf(stderr, "error: %s\n", dgvo_last_error());
    return exit_code(status);
  }
  std::printf("ate %.9g\nrte %.9g\nscale %.9g\n", ate, rte, scale);
  return 0;
}

int cmd_generate(const std::string& config_path, const std::string& out_dir) {
  const dgvo_status status =
      dgvo_generate_sequence(config_path.c_str(), out_dir.c_str());
  if (status != DGVO_OK) {
    std::fprintf(stderr, "error: %s\n", dgvo_last_error());
    return exit_code(status);
  }
  std::printf("sequence written to %s\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dgvo: depth-prior-guided visual odometry experiments"};
  app.set_version_flag("--version", dgvo_version());
  app.require_subcommand(1);

  std::string config_path, output_dir, est_path, gt_path, out_dir;
  uint64_t seed = 0;

  CLI::App* run = app.add_subcommand(
      "run", "run an experiment described by a JSON config");
  run->add_option("-c,--config", config_path, "experiment config (JSON)")
      ->required();
  CLI::Option* seed_opt =
      run->add_option("--seed", seed, "override the config seed");
  run->add_option("-o,--output-dir", output_dir,
                  "override the config output directory");

  CLI::App* metrics = app.add_subcommand(
      "metrics", "ATE/RTE between two TUM trajectory files");
  metrics->add_option("--est", est_path, "estimated trajectory")->required();
  metrics->add_option("--gt", gt_path, "ground-truth trajectory")->required();

  CLI::App* generate = app.add_subcommand(
      "generate", "render a synthetic sequence to disk");
  generate->add_option("-c,--config", config_path, "experiment config (JSON)")
      ->required();
  generate->add_option("-o,--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // usage problems are configuration errors
  }

  if (run->parsed()) {
    return cmd_run(config_path, seed_opt->count() > 0, seed, output_dir);
  }
  if (metrics->parsed()) return cmd_metrics(est_path, gt_path);
  if (generate->parsed()) return cmd_generate(config_path, out_dir);
  return 2;
}
