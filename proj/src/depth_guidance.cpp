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

#include "depth_guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common.hpp"

namespace dgvo {

double photometric_error(const FrameGraph& graph, int keyframe_id,
                         const Grid& inv_depth_i) {
  const Keyframe* kf = graph.find(keyframe_id);
  if (kf == nullptr) {
    throw Error(ErrorCode::NoEdges,
                "keyframe " + std::to_string(keyframe_id) + " not in window");
  }

  double sum = 0.0;
  long count = 0;
  bool any_edge = false;

  for (const Edge& e : graph.edges) {
    if (e.src != keyframe_id || e.flow.empty()) continue;
    const Keyframe* dst = graph.find(e.dst);
    if (dst == nullptr) continue;
    any_edge = true;

    const Pose j_from_i = relative_pose(kf->pose, dst->pose);
    const Eigen::Matrix3d R = j_from_i.rotation.toRotationMatrix();
    const Eigen::Vector3d& t = j_from_i.translation;
    const CameraIntrinsics& K = kf->intrinsics;
    const int f = K.width / inv_depth_i.width;

    int idx = 0;
    for (int gy = 0; gy < inv_depth_i.height; ++gy) {
      for (int gx = 0; gx < inv_depth_i.width; ++gx, ++idx) {
        if (!kf->pixel_mask[idx]) continue;
        const double u = inv_depth_i[idx];
        if (!(u > 0.0) || !std::isfinite(u)) continue;
        const Eigen::Vector2d pix(grid_center(gx, f), grid_center(gy, f));
        const Eigen::Vector3d p_j = R * (pixel_ray(K, pix) / u) + t;
        if (p_j.z() <= kMinDepth) continue;
        const Eigen::Vector2d q = project(K, p_j);
        if (!inside_image(q.x(), q.y(), K.width, K.height)) continue;
        const Eigen::Vector3d c_i = bilinear(kf->image, pix.x(), pix.y());
        const Eigen::Vector3d c_j = bilinear(dst->image, q.x(), q.y());
        const double w = e.flow.confidence[idx];
        sum += w * (c_i - c_j).squaredNorm();
        ++count;
      }
    }
  }

  if (!any_edge) {
    throw Error(ErrorCode::NoEdges, "keyframe " + std::to_string(keyframe_id) +
                                        " has no outgoing edges");
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

void set_gate_reference(const FrameGraph& graph, GateState& state) {
  if (!graph.initialized) {
    throw Error(ErrorCode::NotInitialized,
                "gate reference requires the warmed-up frame graph");
  }
  if (state.has_reference()) {
    throw Error(ErrorCode::GateAlreadySet, "eta_init is immutable once set");
  }
  const Keyframe& latest = graph.keyframes.back();
  state.eta_init = photometric_error(graph, latest.id, latest.inv_depth);
  // A perfectly matching warmup (synthetic, noiseless) can yield a zero
  // error; keep the reference strictly positive so the gate stays defined.
  state.eta_init = std::max(state.eta_init, 1e-300);
}

int depth_gate(double eta_new, const GateState& state) {
  if (!state.has_reference()) {
    throw Error(ErrorCode::NotInitialized, "eta_init has not been set");
  }
  return eta_new < state.alpha * state.eta_init ? 1 : 0;
}

bool mvs_gate(const MvsGateInput& input) {
  const double n_prev = input.t_prev.norm();
  const double n_curr = input.t_curr.norm();
  if (n_prev < 1e-9 || n_curr < 1e-9) return false;  // angle undefined
  if (!(n_prev + n_curr > 0.1)) return false;
  const double cos_a =
      std::clamp(input.t_prev.dot(input.t_curr) / (n_prev * n_curr), -1.0, 1.0);
  const double angle_deg = std::acos(cos_a) * 180.0 / M_PI;
  constexpr double kTol = 1e-9;  // inclusive interval bounds
  return angle_deg >= 10.0 - kTol && angle_deg <= 30.0 + kTol;
}

ConfidenceMask confidence_mask(const Grid& confidence, const BoolGrid& valid,
                               double drop_fraction) {
  if (!(drop_fraction >= 0.0 && drop_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigError, "drop_fraction must be in [0, 1)");
  }
  ConfidenceMask out;
  out.keep = BoolGrid(confidence.width, confidence.height, false);

  std::vector<int> order;
  order.reserve(confidence.size());
  for (int i = 0; i < confidence.size(); ++i) {
    if (valid[i]) order.push_back(i);
  }
  const int n_drop =
      static_cast<int>(std::floor(drop_fraction * order.size()));
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return confidence[a] != confidence[b] ? confidence[a] < confidence[b]
                                          : a < b;
  });
  for (size_t k = n_drop; k < order.size(); ++k) out.keep.set(order[k], true);
  out.dropped = n_drop;
  return out;
}

DepthPrior metric_from_relative(const Grid& raw, double scale, double shift) {
  if (!(scale > 0.0)) {
    throw Error(ErrorCode::ConfigError, "scale must be > 0");
  }
  DepthPrior prior;
  prior.kind = PriorKind::File;
  prior.depth = Grid(raw.width, raw.height, 0.0);
  prior.valid = BoolGrid(raw.width, raw.height, false);
  for (int i = 0; i < raw.size(); ++i) {
    const double denom = scale * raw[i] + shift;
    if (std::isfinite(denom) && denom > 0.0) {
      prior.depth[i] = 1.0 / denom;
      prior.valid.set(i, true);
    }
  }
  return prior;
}

Grid align_prior(const Grid& prior, const Grid& reference,
                 double rel_threshold) {
  if (!prior.same_shape(reference)) {
    throw Error(ErrorCode::DimensionMismatch,
                "prior and reference shapes differ");
  }
  const int n = prior.size();
  double err_sum = 0.0;
  long err_count = 0;
  for (int i = 0; i < n; ++i) {
    if (reference[i] > 0.0 && std::isfinite(prior[i])) {
      err_sum += std::abs(prior[i] - reference[i]) / reference[i];
      ++err_count;
    }
  }
  if (err_count == 0 || err_sum / err_count <= rel_threshold) return prior;

  // closed-form least squares for a*prior + b ~= reference
  double sp = 0, sr = 0, spp = 0, spr = 0;
  for (int i = 0; i < n; ++i) {
    sp += prior[i];
    sr += reference[i];
    spp += prior[i] * prior[i];
    spr += prior[i] * reference[i];
  }
  const double denom = n * spp - sp * sp;
  double a, b;
  if (std::abs(denom) < 1e-12 * std::max(1.0, spp) * n) {
    a = 0.0;  // constant prior: fall back to the reference mean
    b = sr / n;
  } else {
    a = (n * spr - sp * sr) / denom;
    b = (sr - a * sp) / n;
  }
  Grid out(prior.width, prior.height);
  for (int i = 0; i < n; ++i) out[i] = a * prior[i] + b;
  return out;
}

}  // namespace dgvo
