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

#ifndef DGVO_PRIORS_HPP
#define DGVO_PRIORS_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "raster.hpp"
#include "synth_world.hpp"

namespace dgvo {

enum class PriorKind { Monocular, Mvs, File };

/// A depth map attached to a keyframe for initialization and regularization.
struct DepthPrior {
  Grid depth;                      // meters
  std::optional<Grid> confidence;  // [0,1], present for MVS priors
  BoolGrid valid;
  PriorKind kind = PriorKind::Monocular;
};

/// Per-edge flow observation: target coordinates in the destination frame and
/// confidence weights in [0,1]. Invalid cells carry confidence 0.
struct FlowObservation {
  std::vector<Eigen::Vector2d> target;
  Grid confidence;
  BoolGrid valid;

  bool empty() const { return target.empty(); }
};

/// Synthetic noise injection; a deterministic function of (inputs, seed).
/// Flow noise splits into a component shared by every edge leaving a source
/// cell (feature mislocalization, the systematic part of a flow model's
/// error) and per-edge jitter; `flow_shared_fraction` is the shared share
/// of the variance. Fully independent per-edge noise makes joint pose-depth
/// refits chase it and bleed scale, which real correlated errors do not.
struct NoiseModel {
  double flow_sigma_px = 0.0;
  double flow_shared_fraction = 0.0;
  double depth_rel_sigma = 0.0;
  double outlier_fraction = 0.0;
  double outlier_scale = 0.0;  // fraction of image width
  uint64_t seed = 0;

  void validate() const;
};

/// Noisy flow observation built on an exact correspondence: Gaussian target
/// noise (shared + per-edge parts, see NoiseModel), a sprinkling of uniform
/// outliers, and a confidence map that decays with the injected noise
/// magnitude (0 on outliers and invisible cells). `pair_seed` draws the
/// per-edge part and outliers; `shared_seed` must depend only on the source
/// frame so the shared part repeats across its edges.
FlowObservation oracle_flow_from_correspondence(const Correspondence& corr,
                                                int image_width,
                                                const NoiseModel& noise,
                                                uint64_t pair_seed,
                                                uint64_t shared_seed);

FlowObservation oracle_flow(const Sequence& seq, int frame_i, int frame_j,
                            const NoiseModel& noise, uint64_t seed);

/// Ground-truth depth with multiplicative relative noise; corrupt_factor
/// rescales the whole map (1 = clean) to exercise the photometric gate.
DepthPrior synth_mono_prior(const Grid& gt_depth, const NoiseModel& noise,
                            uint64_t seed, double corrupt_factor = 1.0);

/// MVS-like prior whose noise grows with the pose error that produced it;
/// the confidence map decreases monotonically with the injected error.
DepthPrior synth_mvs_prior(const Grid& gt_depth, double pose_error_m,
                           const NoiseModel& noise, uint64_t seed);

/// Reads an RDEPTH file into a prior (kind = File); non-positive and
/// non-finite samples are flagged invalid. `expected_width/height`, when
/// positive, are checked against the header (DimensionMismatch).
DepthPrior load_depth_file(const std::string& path, int expected_width = -1,
                           int expected_height = -1);

}  // namespace dgvo

#endif  // DGVO_PRIORS_HPP
