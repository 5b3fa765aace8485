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

#ifndef DGVO_PIPELINE_HPP
#define DGVO_PIPELINE_HPP

#include <limits>
#include <map>

#include "ba_solver.hpp"
#include "depth_guidance.hpp"

namespace dgvo {

enum class GateMode { Adaptive, AlwaysOn, NeverOn };
enum class PriorSource { Synthetic, None, Files };

struct PriorConfig {
  PriorSource source = PriorSource::Synthetic;
  bool use_mvs = true;
  double mono_rel_sigma = 0.05;
  double mvs_rel_sigma = 0.02;
  double flow_sigma_px = 0.0;
  double flow_shared_fraction = 0.0;
  double outlier_fraction = 0.0;
  double outlier_scale = 0.05;
  // Residual-flow tracking model: the provider corrects the current
  // reprojection toward the oracle target, but its correction degrades
  // with the size of the initial flow error. Per cell with misfit m the
  // delivered target keeps a fraction beta(m) = beta_max * m^2/(m^2+m0^2)
  // of the current error. beta_max = 0 reproduces the raw oracle.
  double flow_residual_beta_max = 0.0;
  double flow_residual_m0_px = 1.5;
  // Flow accuracy degrades when the geometry it starts from is poor: the
  // per-pair noise sigma is scaled by min(1 + gain * e_d, cap), where e_d
  // is the source frame's median relative inverse-depth error at the time
  // the pair is first observed. Good priors keep the scale near 1;
  // constant-depth initialization pays the cap.
  double flow_depth_gain = 2.0;
  double flow_noise_scale_cap = 4.0;
  double corrupt_fraction = 0.0;  // share of post-warmup frames corrupted
  double corrupt_factor = 3.0;    // global scale applied to corrupted priors
  double realign_threshold = -1.0;  // >= 0 enables affine realignment to GT
  std::string depth_dir;            // Files source: RDEPTH per frame
  bool file_relative = false;       // Files: apply scale/shift conversion
};

struct PipelineConfig {
  double alpha = 1.5;  // 1.75 outdoor, 1.5 indoor
  double dpt_scale = 0.000305;
  double dpt_shift = 0.1378;
  double lambda_reg = 0.05;
  int window_size = 12;
  int edge_radius = 3;
  int flow_steps = 6;
  int ba_iters_per_step = 2;
  int mvs_trigger_iteration = 8;
  int warmup_keyframes = 12;
  bool fast_mode = false;  // non-keyframes copy the nearest keyframe depth
  double keyframe_flow_threshold_px = 2.4;
  int nonkeyframe_flow_steps = 2;
  int nonkeyframe_refs = 2;
  double constant_init_depth_m = 1.0;  // used when no prior is available
  double huber_delta_px = 1.0;
  double init_damping = 1e-4;
  double inv_depth_min = 1e-4;
  double inv_depth_max = 10.0;
  double confidence_drop_fraction = 0.2;
  bool run_global_ba = false;
  int global_edge_radius = 6;
  int global_ba_iters = 12;
  GateMode gate_mode = GateMode::Adaptive;
  uint64_t seed = 7;
  PriorConfig priors;

  void validate() const;  // throws ConfigError naming the offending field
};

struct FrameDiagnostics {
  int frame_id = -1;
  double timestamp = 0.0;
  bool is_keyframe = false;
  double eta_prime = std::numeric_limits<double>::quiet_NaN();
  int gate_C = -1;  // -1: not decided (non-keyframe)
  bool mvs_checked = false;
  bool mvs_applied = false;
  bool prior_corrupted = false;
  int flow_updates = 0;
  int ba_iterations = 0;
  // mean residual-flow magnitude measured before each flow update and once
  // after the final BA iteration; index k corresponds to iteration
  // k * ba_iters_per_step
  std::vector<double> residual_flow;
};

struct PipelineResult {
  std::vector<double> timestamps;  // per input frame
  std::vector<Pose> poses;         // per input frame, estimation order
  std::vector<FrameDiagnostics> diagnostics;
  GateState gate;
  FrameGraph graph;  // final state: window + archive (full keyframe states)
  int n_keyframes = 0;
};

/// Builds a keyframe candidate: pose carried over from the previous keyframe
/// (identity relative motion), inverse depth from the prior (or constant when
/// absent). Throws MissingPrior when `require_prior` but prior is null.
Keyframe init_frame(int id, double timestamp, const ColorImage& image,
                    const CameraIntrinsics& K, int downsample,
                    const Pose& init_pose, const DepthPrior* prior,
                    double constant_depth_m, double inv_depth_min,
                    double inv_depth_max, bool require_prior);

/// Runs the full loop over a synthetic (or file-backed) sequence:
/// per-keyframe flow/BA schedule with gating and MVS injection, pose-only
/// tracking for non-keyframes, sliding, and optional global refinement.
/// Deterministic given (config, sequence).
PipelineResult run_sequence(const PipelineConfig& config, const Sequence& seq);

}  // namespace dgvo

#endif  // DGVO_PIPELINE_HPP
