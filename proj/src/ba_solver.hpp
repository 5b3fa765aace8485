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

#ifndef DGVO_BA_SOLVER_HPP
#define DGVO_BA_SOLVER_HPP

#include <functional>
#include <set>
#include <vector>

#include "frame_graph.hpp"

namespace dgvo {

enum class BAMode { Full, PoseOnly };

/// One bundle-adjustment problem over the current graph. Depth state is
/// parameterized as inverse depth u = 1/d; the regularizer pulls u toward
/// u* = 1/d* (same per-pixel minimizer as the depth-space form, but linear
/// and far better conditioned for distant points). The regularizer is
/// weighted by each edge's per-pixel flow confidence and summed over edges.
struct BAProblem {
  FrameGraph* graph = nullptr;
  double lambda_reg = 0.05;
  std::set<int> fixed_pose_ids;  // gauge anchors
  BAMode mode = BAMode::Full;
  double huber_delta_px = 1.0;   // robust loss on reprojection residuals
  double init_damping = 1e-4;
  double inv_depth_min = 1e-4;
  double inv_depth_max = 10.0;
};

struct CostBreakdown {
  double reprojection = 0.0;
  double regularization = 0.0;
  double total() const { return reprojection + regularization; }
};

/// Plain (non-robust) objective value, split into its two terms:
///   sum_(i,j) w_ij |p*_ij - reproject(...)|^2
/// + sum_(i,j) C_i * lambda * w_ij * (u_i - u*_i)^2
/// Masked cells and cells without valid observations are excluded from both.
/// Throws MissingPrior when a keyframe has gate_C = 1 but no prior attached.
CostBreakdown evaluate_objective(const BAProblem& problem);

/// The cost the solver actually decreases: Huber-robustified reprojection
/// term plus the quadratic regularizer.
double solver_cost(const BAProblem& problem);

struct DepthEntry {
  int kf_slot = 0;
  int cell = 0;
  double diag = 0.0;      // H_uu (scalar per cell)
  double grad = 0.0;      // g_u
  // coupling blocks to free pose slots: H_{pose,u}
  std::vector<std::pair<int, Vector6d>> coupling;
};

/// Gauss-Newton normal equations. Gauge-fixed poses carry an identity
/// diagonal block, zero gradient and no couplings, so their increment is
/// exactly zero under any solver.
struct NormalEquations {
  std::vector<int> pose_ids;
  std::vector<char> fixed;
  Eigen::MatrixXd pose_hessian;   // 6N x 6N
  Eigen::VectorXd pose_gradient;  // 6N
  std::vector<DepthEntry> depth;  // one per optimized depth cell (Full mode)

  int n_poses() const { return static_cast<int>(pose_ids.size()); }
};

NormalEquations linearize(const BAProblem& problem);

/// One reprojection residual with its analytic Jacobians. Pose Jacobians are
/// taken w.r.t. right-multiplicative twists on world_from_camera; the depth
/// Jacobian w.r.t. the source cell's inverse depth.
struct ResidualBlock {
  Eigen::Vector2d residual;
  Eigen::Matrix<double, 2, 6> J_pose_i;
  Eigen::Matrix<double, 2, 6> J_pose_j;
  Eigen::Vector2d J_inv_depth;
  double confidence = 0.0;
  bool active = false;  // false: masked, invalid, or behind the camera
};

/// Residual target - reproject(...) for one grid cell of the edge src -> dst,
/// evaluated at the keyframes' current state. This is the exact quantity
/// linearize() assembles (before confidence and robust weighting).
ResidualBlock reprojection_block(const Keyframe& src, const Keyframe& dst,
                                 const FlowObservation& obs, int cell);

/// Depth-regularization residual sqrt(lambda*w) * (u - u*) for one cell;
/// the Jacobian w.r.t. inverse depth is the constant sqrt(lambda*w).
struct DepthRegBlock {
  double residual = 0.0;
  double jacobian = 0.0;
  bool active = false;
};

DepthRegBlock depth_reg_block(const Keyframe& kf, const FlowObservation& obs,
                              int cell, double lambda);

struct StateIncrement {
  std::vector<Twist> pose;    // per pose slot, zero for fixed poses
  std::vector<double> depth;  // aligned with NormalEquations::depth
};

/// Solves the damped system (H + damping*I) dx = -g by eliminating the
/// diagonal depth block (exact Schur complement). Throws SingularSystem if
/// the reduced pose system is not solvable.
StateIncrement solve_step(const NormalEquations& eq, double damping);

struct BAResult {
  double cost_before = 0.0;
  double cost_after = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;  // solver cost after each iteration
};

/// Damped Gauss-Newton: n_iters rounds of linearize / solve / retract with
/// Levenberg damping adaptation (accept only strict cost decreases, x10 on
/// rejection, up to 5 attempts per iteration). Inverse depths are clamped to
/// [inv_depth_min, inv_depth_max]; PoseOnly mode leaves them untouched.
BAResult run_ba(BAProblem& problem, int n_iters);

using FlowFiller = std::function<FlowObservation(int src, int dst)>;

/// Final refinement over all retained keyframes (archive + window merged into
/// problem.graph by the caller): rebuilds edges with `global_radius` (keeping
/// existing observations), fills missing observations through `fill`, anchors
/// the first keyframe and runs run_ba.
BAResult global_ba(BAProblem& problem, int global_radius, int n_iters,
                   const FlowFiller& fill);

}  // namespace dgvo

#endif  // DGVO_BA_SOLVER_HPP
