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

#ifndef DGVO_DEPTH_GUIDANCE_HPP
#define DGVO_DEPTH_GUIDANCE_HPP

#include <vector>

#include "frame_graph.hpp"

namespace dgvo {

struct GateDecision {
  int keyframe_id = -1;
  double eta_prime = 0.0;
  int condition = 0;
};

/// Per-run state of the adaptive depth-regularization gate. The reference
/// error is set once, after the warmup graph has been optimized, and is
/// immutable afterwards.
struct GateState {
  double alpha = 1.5;       // 1.75 outdoor, 1.5 indoor
  double eta_init = -1.0;   // negative until the reference is set
  std::vector<GateDecision> decisions;

  bool has_reference() const { return eta_init > 0.0; }
};

/// Average confidence-weighted squared color error from keyframe `i` to its
/// connected frames, with correspondences induced by the given inverse depth
/// and the current graph poses. Colors in the destination frame are fetched
/// by bilinear interpolation; cells leaving the frame are excluded and the
/// sum is divided by the number of contributing cells. Throws NoEdges if the
/// keyframe has no outgoing edge with an observation.
double photometric_error(const FrameGraph& graph, int keyframe_id,
                         const Grid& inv_depth_i);

/// Freezes eta_init to the photometric error of the latest keyframe of the
/// warmed-up graph. Throws NotInitialized before warmup, GateAlreadySet on a
/// second call.
void set_gate_reference(const FrameGraph& graph, GateState& state);

/// C = 1 iff eta_new < alpha * eta_init (strict).
int depth_gate(double eta_new, const GateState& state);

struct MvsGateInput {
  Eigen::Vector3d t_prev = Eigen::Vector3d::Zero();  // keyframes k-2 -> k-1
  Eigen::Vector3d t_curr = Eigen::Vector3d::Zero();  // keyframes k-1 -> k
};

/// MVS guidance condition: combined translation above 0.1 m and the angle
/// between the two translations inside [10, 30] degrees (inclusive).
/// Degenerate (near-zero) translations fail the gate.
bool mvs_gate(const MvsGateInput& input);

struct ConfidenceMask {
  BoolGrid keep;
  int dropped = 0;
};

/// Keeps all but the lowest `drop_fraction` of the valid cells by confidence;
/// ties at the cutoff are broken by cell index (lower index dropped first) so
/// exactly floor(drop_fraction * N) cells are removed. Cells invalid on input
/// stay dropped.
ConfidenceMask confidence_mask(const Grid& confidence, const BoolGrid& valid,
                               double drop_fraction = 0.2);

/// Metric depth from a relative inverse-depth-like map: 1/(scale*raw+shift);
/// cells violating positivity are flagged invalid.
DepthPrior metric_from_relative(const Grid& raw, double scale, double shift);

/// Affine realignment rule: when the mean relative error of `prior` against
/// `reference` exceeds rel_threshold, returns the closed-form least-squares
/// fit a*prior + b; otherwise returns prior unchanged. A constant prior
/// degenerates to the reference mean (a = 0).
Grid align_prior(const Grid& prior, const Grid& reference,
                 double rel_threshold = 0.2);

}  // namespace dgvo

#endif  // DGVO_DEPTH_GUIDANCE_HPP
