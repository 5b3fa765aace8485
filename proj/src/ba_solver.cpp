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

#include "ba_solver.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "common.hpp"

namespace dgvo {

namespace {

struct EdgeContext {
  const Edge* edge = nullptr;
  const Keyframe* src = nullptr;
  const Keyframe* dst = nullptr;
  int slot_src = -1;
  int slot_dst = -1;
};

// Edges sorted by (src, dst) so reductions are order-stable.
std::vector<EdgeContext> active_edges(const FrameGraph& graph) {
  std::vector<EdgeContext> out;
  for (const Edge& e : graph.edges) {
    if (e.flow.empty()) continue;
    EdgeContext ctx;
    ctx.edge = &e;
    ctx.src = graph.find(e.src);
    ctx.dst = graph.find(e.dst);
    if (ctx.src == nullptr || ctx.dst == nullptr) continue;
    ctx.slot_src = graph.window_index(e.src);
    ctx.slot_dst = graph.window_index(e.dst);
    out.push_back(ctx);
  }
  std::sort(out.begin(), out.end(),
            [](const EdgeContext& a, const EdgeContext& b) {
              if (a.edge->src != b.edge->src) return a.edge->src < b.edge->src;
              return a.edge->dst < b.edge->dst;
            });
  return out;
}

void check_priors(const BAProblem& problem) {
  for (const Keyframe& kf : problem.graph->keyframes) {
    if (kf.gate_C == 1 && !kf.has_prior()) {
      throw Error(ErrorCode::MissingPrior,
                  "keyframe " + std::to_string(kf.id) +
                      " has gate_C = 1 but no prior attached");
    }
  }
}

// Light per-cell residual for the cost paths; linearization uses the full
// block with Jacobians.
struct CellResidual {
  Eigen::Vector2d r;
  double w = 0.0;
  bool active = false;
};

inline CellResidual cell_residual(const EdgeContext& ctx,
                                  const Eigen::Matrix3d& R,
                                  const Eigen::Vector3d& t,
                                  const CameraIntrinsics& K, int downsample,
                                  int gx, int gy, int idx) {
  CellResidual out;
  const FlowObservation& obs = ctx.edge->flow;
  if (!obs.valid[idx] || !ctx.src->pixel_mask[idx]) return out;
  const double w = obs.confidence[idx];
  if (w <= 0.0) return out;
  const double u = ctx.src->inv_depth[idx];
  if (!(u > 0.0) || !std::isfinite(u)) return out;

  const Eigen::Vector2d pix(grid_center(gx, downsample),
                            grid_center(gy, downsample));
  const Eigen::Vector3d p_i = pixel_ray(K, pix) / u;
  const Eigen::Vector3d p_j = R * p_i + t;
  if (p_j.z() <= kMinDepth) return out;

  out.r = obs.target[idx] - project(K, p_j);
  out.w = w;
  out.active = true;
  return out;
}

inline double huber_weight(double norm, double delta) {
  return norm <= delta ? 1.0 : delta / norm;
}

inline double huber_rho(double norm, double delta) {
  return norm <= delta ? norm * norm : delta * (2.0 * norm - delta);
}

double regularization_cost(const BAProblem& problem,
                           const std::vector<EdgeContext>& edges) {
  double total = 0.0;
  for (const EdgeContext& ctx : edges) {
    const Keyframe& kf = *ctx.src;
    if (kf.gate_C != 1) continue;
    const DepthPrior& prior = kf.active_prior();
    const FlowObservation& obs = ctx.edge->flow;
    for (int idx = 0; idx < kf.inv_depth.size(); ++idx) {
      if (!obs.valid[idx] || !kf.pixel_mask[idx] || !prior.valid[idx]) continue;
      const double w = obs.confidence[idx];
      if (w <= 0.0) continue;
      const double du = kf.inv_depth[idx] - 1.0 / prior.depth[idx];
      total += problem.lambda_reg * w * du * du;
    }
  }
  return total;
}

// Shared by the public reprojection_block and the linearize hot path.
ResidualBlock block_impl(const Keyframe& src, const FlowObservation& obs,
                         int cell, const Eigen::Matrix3d& R,
                         const Eigen::Vector3d& t) {
  ResidualBlock out;
  if (obs.empty() || !obs.valid[cell] || !src.pixel_mask[cell]) return out;
  const double w = obs.confidence[cell];
  if (w <= 0.0) return out;
  const double u = src.inv_depth[cell];
  if (!(u > 0.0) || !std::isfinite(u)) return out;

  const CameraIntrinsics& K = src.intrinsics;
  const int f = K.width / src.inv_depth.width;
  const int gx = cell % src.inv_depth.width;
  const int gy = cell / src.inv_depth.width;
  const Eigen::Vector2d pix(grid_center(gx, f), grid_center(gy, f));
  const Eigen::Vector3d X_i = pixel_ray(K, pix) / u;
  const Eigen::Vector3d p_j = R * X_i + t;
  if (p_j.z() <= kMinDepth) return out;

  out.residual = obs.target[cell] - project(K, p_j);
  out.confidence = w;

  const double iz = 1.0 / p_j.z();
  Eigen::Matrix<double, 2, 3> P;
  P << K.fx * iz, 0, -K.fx * p_j.x() * iz * iz,
       0, K.fy * iz, -K.fy * p_j.y() * iz * iz;

  // r = target - project(p_j)  =>  dr/dx = -P * dp_j/dx
  // pose i update: p_j <- R * Exp(xi) X_i + t, dp_j/dxi = R [-skew(X_i) | I]
  out.J_pose_i.block<2, 3>(0, 0) = P * (R * skew(X_i));
  out.J_pose_i.block<2, 3>(0, 3) = -P * R;
  // pose j update: p_j <- Exp(-xi) p_j, dp_j/dxj = [skew(p_j) | -I]
  out.J_pose_j.block<2, 3>(0, 0) = -P * skew(p_j);
  out.J_pose_j.block<2, 3>(0, 3) = P;
  // dp_j/du = -(p_j - t)/u
  out.J_inv_depth = P * (p_j - t) / u;

  out.active = true;
  return out;
}

double reprojection_cost(const BAProblem& problem,
                         const std::vector<EdgeContext>& edges, bool robust) {
  double total = 0.0;
  for (const EdgeContext& ctx : edges) {
    const CameraIntrinsics& K = ctx.src->intrinsics;
    const int f = K.width / ctx.src->inv_depth.width;
    const Pose j_from_i = relative_pose(ctx.src->pose, ctx.dst->pose);
    const Eigen::Matrix3d R = j_from_i.rotation.toRotationMatrix();
    const Eigen::Vector3d& t = j_from_i.translation;

    int idx = 0;
    for (int gy = 0; gy < ctx.src->inv_depth.height; ++gy) {
      for (int gx = 0; gx < ctx.src->inv_depth.width; ++gx, ++idx) {
        const CellResidual c = cell_residual(ctx, R, t, K, f, gx, gy, idx);
        if (!c.active) continue;
        total += robust
                     ? c.w * huber_rho(c.r.norm(), problem.huber_delta_px)
                     : c.w * c.r.squaredNorm();
      }
    }
  }
  return total;
}

}  // namespace

CostBreakdown evaluate_objective(const BAProblem& problem) {
  check_priors(problem);
  const std::vector<EdgeContext> edges = active_edges(*problem.graph);
  CostBreakdown out;
  out.reprojection = reprojection_cost(problem, edges, /*robust=*/false);
  out.regularization = regularization_cost(problem, edges);
  return out;
}

double solver_cost(const BAProblem& problem) {
  check_priors(problem);
  const std::vector<EdgeContext> edges = active_edges(*problem.graph);
  double total = reprojection_cost(problem, edges, /*robust=*/true);
  if (problem.mode == BAMode::Full) {
    total += regularization_cost(problem, edges);
  }
  return total;
}

NormalEquations linearize(const BAProblem& problem) {
  check_priors(problem);
  const FrameGraph& graph = *problem.graph;
  const int n_poses = static_cast<int>(graph.keyframes.size());

  NormalEquations eq;
  eq.pose_ids.reserve(n_poses);
  eq.fixed.reserve(n_poses);
  for (const Keyframe& kf : graph.keyframes) {
    eq.pose_ids.push_back(kf.id);
    eq.fixed.push_back(problem.fixed_pose_ids.count(kf.id) ? 1 : 0);
  }
  eq.pose_hessian = Eigen::MatrixXd::Zero(6 * n_poses, 6 * n_poses);
  eq.pose_gradient = Eigen::VectorXd::Zero(6 * n_poses);

  // One depth variable per masked-in cell of every keyframe (Full mode).
  std::vector<size_t> slot_offset(n_poses + 1, 0);
  for (int s = 0; s < n_poses; ++s) {
    slot_offset[s + 1] = slot_offset[s] + graph.keyframes[s].inv_depth.size();
  }
  std::vector<int> entry_index;
  if (problem.mode == BAMode::Full) {
    entry_index.assign(slot_offset[n_poses], -1);
    for (int s = 0; s < n_poses; ++s) {
      const Keyframe& kf = graph.keyframes[s];
      for (int cell = 0; cell < kf.inv_depth.size(); ++cell) {
        if (!kf.pixel_mask[cell]) continue;
        DepthEntry entry;
        entry.kf_slot = s;
        entry.cell = cell;
        entry_index[slot_offset[s] + cell] = static_cast<int>(eq.depth.size());
        eq.depth.push_back(std::move(entry));
      }
    }
  }

  auto couple = [](DepthEntry& entry, int slot, const Vector6d& block) {
    for (auto& [s, b] : entry.coupling) {
      if (s == slot) {
        b += block;
        return;
      }
    }
    entry.coupling.emplace_back(slot, block);
  };

  const std::vector<EdgeContext> edges = active_edges(graph);
  for (const EdgeContext& ctx : edges) {
    const Keyframe& src = *ctx.src;
    const Pose j_from_i = relative_pose(src.pose, ctx.dst->pose);
    const Eigen::Matrix3d R = j_from_i.rotation.toRotationMatrix();
    const Eigen::Vector3d& t = j_from_i.translation;
    const bool src_free = !eq.fixed[ctx.slot_src];
    const bool dst_free = !eq.fixed[ctx.slot_dst];

    for (int idx = 0; idx < src.inv_depth.size(); ++idx) {
      const ResidualBlock blk = block_impl(src, ctx.edge->flow, idx, R, t);
      if (!blk.active) continue;

      const double W = blk.confidence *
                       huber_weight(blk.residual.norm(), problem.huber_delta_px);
      const auto& J_i = blk.J_pose_i;
      const auto& J_j = blk.J_pose_j;

      if (src_free) {
        eq.pose_hessian.block<6, 6>(6 * ctx.slot_src, 6 * ctx.slot_src)
            .noalias() += W * J_i.transpose() * J_i;
        eq.pose_gradient.segment<6>(6 * ctx.slot_src).noalias() +=
            W * J_i.transpose() * blk.residual;
      }
      if (dst_free) {
        eq.pose_hessian.block<6, 6>(6 * ctx.slot_dst, 6 * ctx.slot_dst)
            .noalias() += W * J_j.transpose() * J_j;
        eq.pose_gradient.segment<6>(6 * ctx.slot_dst).noalias() +=
            W * J_j.transpose() * blk.residual;
      }
      if (src_free && dst_free) {
        eq.pose_hessian.block<6, 6>(6 * ctx.slot_src, 6 * ctx.slot_dst)
            .noalias() += W * J_i.transpose() * J_j;
        eq.pose_hessian.block<6, 6>(6 * ctx.slot_dst, 6 * ctx.slot_src)
            .noalias() += W * J_j.transpose() * J_i;
      }

      if (problem.mode == BAMode::Full) {
        const int ei = entry_index[slot_offset[ctx.slot_src] + idx];
        DepthEntry& entry = eq.depth[ei];
        entry.diag += W * blk.J_inv_depth.squaredNorm();
        entry.grad += W * blk.J_inv_depth.dot(blk.residual);
        if (src_free) {
          couple(entry, ctx.slot_src, W * J_i.transpose() * blk.J_inv_depth);
        }
        if (dst_free) {
          couple(entry, ctx.slot_dst, W * J_j.transpose() * blk.J_inv_depth);
        }
      }
    }

    // depth regularization: residual sqrt(lambda*w) * (u - u*), linear in u
    if (problem.mode == BAMode::Full && src.gate_C == 1) {
      const DepthPrior& prior = src.active_prior();
      const FlowObservation& obs = ctx.edge->flow;
      for (int cell = 0; cell < src.inv_depth.size(); ++cell) {
        if (!obs.valid[cell] || !src.pixel_mask[cell] || !prior.valid[cell]) {
          continue;
        }
        const double w = obs.confidence[cell];
        if (w <= 0.0) continue;
        const int ei = entry_index[slot_offset[ctx.slot_src] + cell];
        DepthEntry& entry = eq.depth[ei];
        const double lw = problem.lambda_reg * w;
        entry.diag += lw;
        entry.grad += lw * (src.inv_depth[cell] - 1.0 / prior.depth[cell]);
      }
    }
  }

  // gauge: unit diagonal, zero gradient -> zero increment for fixed poses
  for (int s = 0; s < n_poses; ++s) {
    if (eq.fixed[s]) {
      eq.pose_hessian.block<6, 6>(6 * s, 6 * s) =
          Eigen::Matrix<double, 6, 6>::Identity();
    }
  }
  return eq;
}

ResidualBlock reprojection_block(const Keyframe& src, const Keyframe& dst,
                                 const FlowObservation& obs, int cell) {
  const Pose j_from_i = relative_pose(src.pose, dst.pose);
  return block_impl(src, obs, cell, j_from_i.rotation.toRotationMatrix(),
                    j_from_i.translation);
}

DepthRegBlock depth_reg_block(const Keyframe& kf, const FlowObservation& obs,
                              int cell, double lambda) {
  DepthRegBlock out;
  if (obs.empty() || !obs.valid[cell] || !kf.pixel_mask[cell]) return out;
  const double w = obs.confidence[cell];
  if (w <= 0.0 || !kf.has_prior()) return out;
  const DepthPrior& prior = kf.active_prior();
  if (!prior.valid[cell]) return out;
  const double root = std::sqrt(lambda * w);
  out.residual = root * (kf.inv_depth[cell] - 1.0 / prior.depth[cell]);
  out.jacobian = root;
  out.active = true;
  return out;
}

StateIncrement solve_step(const NormalEquations& eq, double damping) {
  if (damping < 0) {
    throw Error(ErrorCode::SingularSystem, "damping must be >= 0");
  }
  const int n = eq.n_poses();
  Eigen::MatrixXd H = eq.pose_hessian;
  H.diagonal().array() += damping;
  Eigen::VectorXd g = eq.pose_gradient;

  std::vector<double> damped_diag(eq.depth.size());
  for (size_t k = 0; k < eq.depth.size(); ++k) {
    const DepthEntry& entry = eq.depth[k];
    const double D = entry.diag + damping;
    if (!(D > 0.0)) {
      throw Error(ErrorCode::SingularSystem,
                  "non-positive depth diagonal after damping");
    }
    damped_diag[k] = D;
    for (const auto& [sa, Ba] : entry.coupling) {
      g.segment<6>(6 * sa).noalias() -= Ba * (entry.grad / D);
      for (const auto& [sb, Bb] : entry.coupling) {
        H.block<6, 6>(6 * sa, 6 * sb).noalias() -= Ba * Bb.transpose() / D;
      }
    }
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "pose system factorization failed");
  }
  Eigen::VectorXd delta_p = ldlt.solve(-g);
  if (!delta_p.allFinite()) {
    throw Error(ErrorCode::SingularSystem, "non-finite pose increment");
  }
  const double residual = (H * delta_p + g).norm();
  if (residual > 1e-6 * std::max(1.0, g.norm())) {
    throw Error(ErrorCode::SingularSystem,
                "reduced pose system is rank-deficient");
  }

  StateIncrement inc;
  inc.pose.resize(n);
  for (int s = 0; s < n; ++s) {
    inc.pose[s] = eq.fixed[s] ? Twist::Zero() : Twist(delta_p.segment<6>(6 * s));
  }
  inc.depth.resize(eq.depth.size());
  for (size_t k = 0; k < eq.depth.size(); ++k) {
    const DepthEntry& entry = eq.depth[k];
    double coupled = 0.0;
    for (const auto& [sa, Ba] : entry.coupling) {
      coupled += Ba.dot(delta_p.segment<6>(6 * sa));
    }
    inc.depth[k] = (-entry.grad - coupled) / damped_diag[k];
  }
  return inc;
}

namespace {

struct StateSnapshot {
  std::vector<Pose> poses;
  std::vector<Grid> inv_depths;
};

StateSnapshot save_state(const FrameGraph& graph) {
  StateSnapshot snap;
  for (const Keyframe& kf : graph.keyframes) {
    snap.poses.push_back(kf.pose);
    snap.inv_depths.push_back(kf.inv_depth);
  }
  return snap;
}

void restore_state(FrameGraph& graph, const StateSnapshot& snap) {
  for (size_t i = 0; i < graph.keyframes.size(); ++i) {
    graph.keyframes[i].pose = snap.poses[i];
    graph.keyframes[i].inv_depth = snap.inv_depths[i];
  }
}

double apply_increment(const BAProblem& problem, const NormalEquations& eq,
                       const StateIncrement& inc) {
  FrameGraph& graph = *problem.graph;
  double norm_sq = 0.0;
  for (int s = 0; s < eq.n_poses(); ++s) {
    if (eq.fixed[s]) continue;
    graph.keyframes[s].pose = retract(graph.keyframes[s].pose, inc.pose[s]);
    norm_sq += inc.pose[s].squaredNorm();
  }
  for (size_t k = 0; k < eq.depth.size(); ++k) {
    const DepthEntry& entry = eq.depth[k];
    Keyframe& kf = graph.keyframes[entry.kf_slot];
    const double u = std::clamp(kf.inv_depth[entry.cell] + inc.depth[k],
                                problem.inv_depth_min, problem.inv_depth_max);
    norm_sq += inc.depth[k] * inc.depth[k];
    kf.inv_depth[entry.cell] = u;
  }
  return std::sqrt(norm_sq);
}

}  // namespace

BAResult run_ba(BAProblem& problem, int n_iters) {
  if (n_iters < 1) {
    throw Error(ErrorCode::ConfigError, "run_ba requires n_iters >= 1");
  }
  if (problem.mode == BAMode::Full && problem.fixed_pose_ids.empty()) {
    throw Error(ErrorCode::ConfigError,
                "full BA requires at least one gauge-fixed pose");
  }

  BAResult result;
  result.cost_before = solver_cost(problem);
  double cost = result.cost_before;
  double damping = problem.init_damping;
  double last_step = 0.0;
  bool last_accepted = false;

  for (int it = 0; it < n_iters; ++it) {
    const NormalEquations eq = linearize(problem);
    const StateSnapshot snapshot = save_state(*problem.graph);
    last_accepted = false;
    for (int attempt = 0; attempt < 5; ++attempt) {
      const StateIncrement inc = solve_step(eq, damping);
      const double step = apply_increment(problem, eq, inc);
      const double candidate = solver_cost(problem);
      if (candidate < cost) {
        cost = candidate;
        damping = std::max(damping * 0.5, 1e-8);
        last_step = step;
        last_accepted = true;
        break;
      }
      restore_state(*problem.graph, snapshot);
      damping = std::min(damping * 10.0, 1e12);
    }
    result.cost_history.push_back(cost);
  }

  result.cost_after = cost;
  result.iterations = n_iters;
  result.converged = !last_accepted || last_step < 1e-6;
  return result;
}

BAResult global_ba(BAProblem& problem, int global_radius, int n_iters,
                   const FlowFiller& fill) {
  FrameGraph& graph = *problem.graph;
  apply_edge_pairs(graph, build_edges(graph, global_radius));
  for (Edge& e : graph.edges) {
    if (e.flow.empty()) e.flow = fill(e.src, e.dst);
  }
  problem.fixed_pose_ids = {graph.keyframes.front().id};
  return run_ba(problem, n_iters);
}

}  // namespace dgvo
