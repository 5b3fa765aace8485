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

#ifndef DGVO_EVAL_IO_HPP
#define DGVO_EVAL_IO_HPP

#include <string>
#include <vector>

#include "pipeline.hpp"

namespace dgvo {

struct TrajectoryEntry {
  double timestamp = 0.0;
  Pose pose;
};

struct Trajectory {
  std::vector<TrajectoryEntry> entries;

  int size() const { return static_cast<int>(entries.size()); }
  void push(double t, const Pose& p) { entries.push_back({t, p}); }
};

struct Sim3Alignment {
  double scale = 1.0;
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return scale * (rotation * p) + translation;
  }
};

/// Closed-form least-squares similarity (rigid when with_scale = false)
/// minimizing sum |s R p_est + t - p_gt|^2 over timestamp-associated pairs
/// (nearest neighbor within 0.02 s, each ground-truth pose used at most
/// once). Throws AssociationFailure (< 3 matches) or DegenerateGeometry
/// (collinear estimate positions).
Sim3Alignment umeyama_align(const Trajectory& est, const Trajectory& gt,
                            bool with_scale);

/// RMSE of position residuals after rigid alignment.
double ate(const Trajectory& est, const Trajectory& gt);

/// RMSE of position residuals after similarity (scale-including) alignment.
double rte(const Trajectory& est, const Trajectory& gt);

struct MetricsReport {
  double ate_m = 0.0;
  double rte_m = 0.0;
  double scale = 1.0;              // similarity-fit scale (est -> gt)
  double max_rot_err_rad = 0.0;    // after rigid alignment
  std::vector<double> frame_timestamps;
  std::vector<double> ate_series;  // per associated frame
  std::vector<double> rte_series;
};

MetricsReport evaluate_trajectories(const Trajectory& est,
                                    const Trajectory& gt);

struct TrajectoryReadResult {
  Trajectory trajectory;
  std::vector<std::string> warnings;  // e.g. renormalized quaternions
};

/// TUM format: `timestamp tx ty tz qx qy qz qw` (scalar-last), `#` comments.
/// Parse failures report the line number; non-monotone timestamps are
/// rejected; off-unit quaternions are normalized with a warning record.
TrajectoryReadResult read_trajectory_tum(const std::string& path);
void write_trajectory_tum(const std::string& path, const Trajectory& traj);

/// Backprojects every masked-in cell of every retained keyframe into the
/// world frame and writes an ASCII PLY with per-point color. Returns the
/// number of points written.
long export_pointcloud(const FrameGraph& graph, const std::string& path);

/// Sequence export/import matching the on-disk layout produced by the CLI
/// `generate` subcommand: meta.json, gt.txt (TUM), image_%06d.rimg,
/// depth_%06d.rdepth.
void export_sequence(const Sequence& seq, const std::string& dir);
Sequence load_sequence(const std::string& dir);

// ---------------------------------------------------------------------------
// Experiment configuration and runner
// ---------------------------------------------------------------------------

struct SequenceConfig {
  bool generate = true;
  std::string path;  // load mode: directory from export_sequence
  SceneKind scene = SceneKind::Room;
  bool constant_texture = false;
  uint64_t scene_seed = 3;
  int width = 96, height = 96;
  double fx = 80, fy = 80, cx = 47.5, cy = 47.5;
  int downsample = 8;
  TrajectorySpec trajectory;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string output_dir;  // empty: no artifacts written
  std::string domain = "indoor";
  PipelineConfig pipeline;
  SequenceConfig sequence;
  bool export_pointcloud = false;
  bool export_gt = true;
};

/// Parses and validates a JSON experiment config; throws ConfigError (with
/// the offending field named) or ParseError.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

struct ExperimentResult {
  MetricsReport metrics;
  PipelineResult pipeline;
  Trajectory estimate;
  Trajectory ground_truth;
  double runtime_s = 0.0;
};

Sequence build_sequence(const ExperimentConfig& config);

/// generate/load -> run pipeline -> metrics -> write artifacts
/// (trajectory.txt, metrics.txt, diagnostics.csv, errors.csv, optional
/// pointcloud.ply and gt.txt) into config.output_dir when set.
ExperimentResult run_experiment(const ExperimentConfig& config);

void write_metrics_report(const std::string& path, const std::string& name,
                          const ExperimentResult& result);
void write_diagnostics_csv(const std::string& path,
                           const PipelineResult& result);
void write_errors_csv(const std::string& path, const MetricsReport& metrics);

}  // namespace dgvo

#endif  // DGVO_EVAL_IO_HPP
