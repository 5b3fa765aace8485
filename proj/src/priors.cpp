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

#include "priors.hpp"

#include <cmath>

#include "common.hpp"
#include "raster_io.hpp"
#include "rng.hpp"

namespace dgvo {

void NoiseModel::validate() const {
  if (flow_sigma_px < 0 || depth_rel_sigma < 0) {
    throw Error(ErrorCode::ConfigError, "noise sigmas must be >= 0");
  }
  if (flow_shared_fraction < 0 || flow_shared_fraction > 1) {
    throw Error(ErrorCode::ConfigError,
                "flow_shared_fraction must be in [0, 1]");
  }
  if (outlier_fraction < 0 || outlier_fraction >= 1 || outlier_scale < 0 ||
      outlier_scale >= 1) {
    throw Error(ErrorCode::ConfigError, "noise fractions must be in [0, 1)");
  }
}

FlowObservation oracle_flow_from_correspondence(const Correspondence& corr,
                                                int image_width,
                                                const NoiseModel& noise,
                                                uint64_t pair_seed,
                                                uint64_t shared_seed) {
  noise.validate();
  const int n = corr.visible.size();
  FlowObservation obs;
  obs.target.assign(static_cast<size_t>(n), Eigen::Vector2d::Zero());
  obs.confidence = Grid(corr.visible.width, corr.visible.height, 0.0);
  obs.valid = BoolGrid(corr.visible.width, corr.visible.height, false);

  Rng rng(mix_seed(noise.seed, pair_seed, 0xf10e));
  Rng rng_shared(mix_seed(noise.seed, shared_seed, 0x5a7ed));
  const double sigma = noise.flow_sigma_px;
  const double sigma_shared = sigma * std::sqrt(noise.flow_shared_fraction);
  const double sigma_pair = sigma * std::sqrt(1.0 - noise.flow_shared_fraction);
  for (int i = 0; i < n; ++i) {
    // streams stay aligned regardless of visibility or outlier draws
    const Eigen::Vector2d eps_shared =
        sigma_shared * Eigen::Vector2d(rng_shared.gaussian(), rng_shared.gaussian());
    const Eigen::Vector2d eps_pair =
        sigma_pair * Eigen::Vector2d(rng.gaussian(), rng.gaussian());
    const double outlier_draw = rng.uniform();
    if (!corr.visible[i]) continue;
    if (outlier_draw < noise.outlier_fraction) {
      Rng orng(mix_seed(noise.seed ^ 0xab5e, pair_seed, i));
      const double angle = 2.0 * M_PI * orng.uniform();
      const double mag = orng.uniform() * noise.outlier_scale * image_width;
      obs.target[i] =
          corr.target[i] + mag * Eigen::Vector2d(std::cos(angle), std::sin(angle));
      obs.confidence[i] = 0.0;
      obs.valid.set(i, true);
      continue;
    }
    const Eigen::Vector2d eps = eps_shared + eps_pair;
    obs.target[i] = corr.target[i] + eps;
    obs.confidence[i] =
        sigma > 0
            ? std::min(1.0, std::exp(-eps.squaredNorm() / (2 * sigma * sigma)))
            : 1.0;
    obs.valid.set(i, true);
  }
  return obs;
}

FlowObservation oracle_flow(const Sequence& seq, int frame_i, int frame_j,
                            const NoiseModel& noise, uint64_t seed) {
  const Correspondence corr = gt_correspondence(seq, frame_i, frame_j);
  return oracle_flow_from_correspondence(
      corr, seq.intrinsics.width, noise, seed,
      mix_seed(0x50c0, static_cast<uint64_t>(frame_i), 0));
}

DepthPrior synth_mono_prior(const Grid& gt_depth, const NoiseModel& noise,
                            uint64_t seed, double corrupt_factor) {
  noise.validate();
  DepthPrior prior;
  prior.kind = PriorKind::Monocular;
  prior.depth = gt_depth;
  prior.valid = BoolGrid(gt_depth.width, gt_depth.height, true);

  Rng rng(mix_seed(noise.seed, seed, 0x301c0));
  for (int i = 0; i < gt_depth.size(); ++i) {
    const double eps = noise.depth_rel_sigma * rng.gaussian();
    double d = gt_depth[i] * (1.0 + eps) * corrupt_factor;
    prior.depth[i] = std::max(d, 1e-3);
  }
  return prior;
}

DepthPrior synth_mvs_prior(const Grid& gt_depth, double pose_error_m,
                           const NoiseModel& noise, uint64_t seed) {
  noise.validate();
  DepthPrior prior;
  prior.kind = PriorKind::Mvs;
  prior.depth = gt_depth;
  prior.valid = BoolGrid(gt_depth.width, gt_depth.height, true);
  prior.confidence = Grid(gt_depth.width, gt_depth.height, 1.0);

  // MVS quality degrades with the pose error of the views it was built from.
  const double sigma_eff =
      noise.depth_rel_sigma * (1.0 + std::max(0.0, pose_error_m) / 0.01);
  Rng rng(mix_seed(noise.seed, seed, 0x3715));
  for (int i = 0; i < gt_depth.size(); ++i) {
    const double unit = rng.gaussian();
    const double eps = sigma_eff * unit;
    prior.depth[i] = std::max(gt_depth[i] * (1.0 + eps), 1e-3);
    (*prior.confidence)[i] =
        sigma_eff > 0 ? 1.0 / (1.0 + std::abs(eps) / sigma_eff) : 1.0;
  }
  return prior;
}

DepthPrior load_depth_file(const std::string& path, int expected_width,
                           int expected_height) {
  Grid depth = read_depth_file(path);
  if ((expected_width > 0 && depth.width != expected_width) ||
      (expected_height > 0 && depth.height != expected_height)) {
    throw Error(ErrorCode::DimensionMismatch,
                path + ": got " + std::to_string(depth.width) + "x" +
                    std::to_string(depth.height) + ", expected " +
                    std::to_string(expected_width) + "x" +
                    std::to_string(expected_height));
  }
  DepthPrior prior;
  prior.kind = PriorKind::File;
  prior.valid = BoolGrid(depth.width, depth.height, false);
  for (int i = 0; i < depth.size(); ++i) {
    if (std::isfinite(depth[i]) && depth[i] > 0.0) prior.valid.set(i, true);
  }
  prior.depth = std::move(depth);
  return prior;
}

}  // namespace dgvo
