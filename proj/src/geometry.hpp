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

#ifndef DGVO_GEOMETRY_HPP
#define DGVO_GEOMETRY_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "common.hpp"
#include "raster.hpp"

namespace dgvo {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Twist = Vector6d;  // [wx wy wz | vx vy vz], radians / meters

// Cheirality cutoff: transformed points with z below this are invalid.
inline constexpr double kMinDepth = 1e-3;

struct CameraIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  bool valid() const {
    return fx > 0 && fy > 0 && cx >= 0 && cx < width && cy >= 0 &&
           cy < height && width > 0 && height > 0;
  }
};

/// Rigid transform on SE(3). Every pose in this codebase is world-from-camera;
/// relative poses are derived, never stored.
struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return Pose{}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  Pose inverse() const {
    Pose out;
    out.rotation = rotation.conjugate();
    out.translation = -(out.rotation * translation);
    return out;
  }

  Pose compose(const Pose& other) const {
    Pose out;
    out.rotation = rotation * other.rotation;
    out.rotation.normalize();
    out.translation = rotation * other.translation + translation;
    return out;
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 3>(0, 0) = rotation.toRotationMatrix();
    m.block<3, 1>(0, 3) = translation;
    return m;
  }
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// SE(3) exponential of a twist [w | v].
Pose se3_exp(const Twist& xi);

/// SE(3) logarithm; valid for rotation angles below pi.
Twist se3_log(const Pose& pose);

/// Retraction used by the solver: pose <- pose o Exp(xi), renormalized.
Pose retract(const Pose& pose, const Twist& xi);

/// j_from_i under the convention j_from_i = inverse(world_from_j) o world_from_i.
Pose relative_pose(const Pose& world_from_i, const Pose& world_from_j);

/// ((u-cx)/fx * z, (v-cy)/fy * z, z). Throws NonPositiveDepth for depth <= 0.
Eigen::Vector3d backproject(const CameraIntrinsics& K,
                            const Eigen::Vector2d& pixel, double depth);

/// Unit-plane ray direction for a pixel: ((u-cx)/fx, (v-cy)/fy, 1).
Eigen::Vector3d pixel_ray(const CameraIntrinsics& K,
                          const Eigen::Vector2d& pixel);

/// Pinhole projection; caller guarantees p.z > 0.
Eigen::Vector2d project(const CameraIntrinsics& K, const Eigen::Vector3d& p);

struct ReprojectionMap {
  std::vector<Eigen::Vector2d> pixels;  // row-major over the input grid
  BoolGrid valid;
};

/// Maps every cell of an optimization grid (downsample factor f, coordinates
/// in full-image pixels) from frame i into frame j with the given per-cell
/// depth. Cells transforming behind the camera or projecting outside frame j
/// are masked invalid, not raised.
ReprojectionMap reproject(const CameraIntrinsics& K, const Pose& j_from_i,
                          const Grid& depth_i, int downsample);

}  // namespace dgvo

#endif  // DGVO_GEOMETRY_HPP
