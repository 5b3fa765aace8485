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

#include "geometry.hpp"

#include <cmath>

namespace dgvo {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Pose se3_exp(const Twist& xi) {
  const Eigen::Vector3d w = xi.head<3>();
  const Eigen::Vector3d v = xi.tail<3>();
  const double theta = w.norm();
  const Eigen::Matrix3d W = skew(w);

  Eigen::Matrix3d R;
  Eigen::Matrix3d V;
  if (theta < 1e-9) {
    R = Eigen::Matrix3d::Identity() + W + 0.5 * W * W;
    V = Eigen::Matrix3d::Identity() + 0.5 * W + (1.0 / 6.0) * W * W;
  } else {
    const double s = std::sin(theta), c = std::cos(theta);
    R = Eigen::Matrix3d::Identity() + (s / theta) * W +
        ((1 - c) / (theta * theta)) * W * W;
    V = Eigen::Matrix3d::Identity() + ((1 - c) / (theta * theta)) * W +
        ((theta - s) / (theta * theta * theta)) * W * W;
  }

  Pose out;
  out.rotation = Eigen::Quaterniond(R);
  out.rotation.normalize();
  out.translation = V * v;
  return out;
}

Twist se3_log(const Pose& pose) {
  Eigen::Quaterniond q = pose.rotation.normalized();
  if (q.w() < 0) q.coeffs() *= -1.0;  // shortest-arc branch
  const Eigen::Vector3d qv = q.vec();
  const double sin_half = qv.norm();
  const double cos_half = q.w();

  Eigen::Vector3d w;
  if (sin_half < 1e-12) {
    w = 2.0 * qv;
  } else {
    const double theta = 2.0 * std::atan2(sin_half, cos_half);
    w = (theta / sin_half) * qv;
  }

  const double theta = w.norm();
  const Eigen::Matrix3d W = skew(w);
  Eigen::Matrix3d Vinv;
  if (theta < 1e-9) {
    Vinv = Eigen::Matrix3d::Identity() - 0.5 * W + (1.0 / 12.0) * W * W;
  } else {
    const double half = 0.5 * theta;
    const double cot_half = std::cos(half) / std::sin(half);
    const double coeff = (1.0 - 0.5 * theta * cot_half) / (theta * theta);
    Vinv = Eigen::Matrix3d::Identity() - 0.5 * W + coeff * W * W;
  }

  Twist xi;
  xi.head<3>() = w;
  xi.tail<3>() = Vinv * pose.translation;
  return xi;
}

Pose retract(const Pose& pose, const Twist& xi) {
  Pose out = pose.compose(se3_exp(xi));
  out.rotation.normalize();
  return out;
}

Pose relative_pose(const Pose& world_from_i, const Pose& world_from_j) {
  return world_from_j.inverse().compose(world_from_i);
}

Eigen::Vector3d backproject(const CameraIntrinsics& K,
                            const Eigen::Vector2d& pixel, double depth) {
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::NonPositiveDepth,
                "backproject requires depth > 0, got " + std::to_string(depth));
  }
  return {(pixel.x() - K.cx) / K.fx * depth, (pixel.y() - K.cy) / K.fy * depth,
          depth};
}

Eigen::Vector3d pixel_ray(const CameraIntrinsics& K,
                          const Eigen::Vector2d& pixel) {
  return {(pixel.x() - K.cx) / K.fx, (pixel.y() - K.cy) / K.fy, 1.0};
}

Eigen::Vector2d project(const CameraIntrinsics& K, const Eigen::Vector3d& p) {
  return {K.fx * (p.x() / p.z()) + K.cx, K.fy * (p.y() / p.z()) + K.cy};
}

ReprojectionMap reproject(const CameraIntrinsics& K, const Pose& j_from_i,
                          const Grid& depth_i, int downsample) {
  ReprojectionMap out;
  out.pixels.assign(static_cast<size_t>(depth_i.size()),
                    Eigen::Vector2d::Zero());
  out.valid = BoolGrid(depth_i.width, depth_i.height, false);

  const Eigen::Matrix3d R = j_from_i.rotation.toRotationMatrix();
  const Eigen::Vector3d& t = j_from_i.translation;

  int idx = 0;
  for (int gy = 0; gy < depth_i.height; ++gy) {
    for (int gx = 0; gx < depth_i.width; ++gx, ++idx) {
      const double d = depth_i[idx];
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      const Eigen::Vector2d pix(grid_center(gx, downsample),
                                grid_center(gy, downsample));
      const Eigen::Vector3d p_i = pixel_ray(K, pix) * d;
      const Eigen::Vector3d p_j = R * p_i + t;
      if (p_j.z() <= kMinDepth) continue;
      const Eigen::Vector2d q = project(K, p_j);
      out.pixels[idx] = q;
      if (inside_image(q.x(), q.y(), K.width, K.height)) out.valid.set(idx, true);
    }
  }
  return out;
}

}  // namespace dgvo
