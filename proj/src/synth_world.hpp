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

#ifndef DGVO_SYNTH_WORLD_HPP
#define DGVO_SYNTH_WORLD_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "raster.hpp"

namespace dgvo {

// Planar surface patch; unbounded planes have bounded = false.
struct SurfacePlane {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  bool bounded = false;
  Eigen::Vector3d u_axis = Eigen::Vector3d::UnitX();
  Eigen::Vector3d v_axis = Eigen::Vector3d::UnitY();
  double half_u = 0, half_v = 0;
};

// Procedural color field over world space: per-channel affine ramps plus a
// smooth seeded value-noise octave, plus an optional millimeter-scale
// speckle layer. The speckle plays the role of irreducible image noise
// (sensor noise, surface micro-texture): any sub-pixel misalignment sees a
// fresh draw, which gives photometric comparisons a realistic floor while
// the field stays a pure deterministic function of position. Gradients are
// nonzero almost everywhere; constant mode exists for the degenerate
// photometric tests.
struct SceneTexture {
  uint64_t seed = 0;
  bool constant = false;
  Eigen::Vector3d base = {0.5, 0.5, 0.5};
  Eigen::Matrix3d channel_gains = Eigen::Matrix3d::Zero();  // row = channel
  double noise_amplitude = 0.1;
  double noise_scale_m = 8.0;
  double speckle_sigma = 0.0;     // per-channel std of the speckle layer
  double speckle_cell_m = 0.002;  // speckle decorrelation length
};

struct Scene {
  std::vector<SurfacePlane> planes;
  SceneTexture texture;
  double min_hit_depth = 0.5;
  double max_hit_depth = 100.0;
};

enum class SceneKind { Room, Frontal };

/// Room: a closed textured box with tilted interior patches; supports large
/// camera rotations. Frontal: a tilted backdrop with near patches and an
/// extra-smooth texture, for photometric tests that need a tiny
/// interpolation floor.
Scene make_scene(SceneKind kind, uint64_t seed, bool constant_texture = false);

Eigen::Vector3d scene_color(const Scene& scene, const Eigen::Vector3d& p);

/// Depth (camera-frame z) of the nearest surface along the ray through
/// `pixel` for a camera at `world_from_cam`; negative if nothing is hit.
double raycast_depth(const Scene& scene, const CameraIntrinsics& K,
                     const Pose& world_from_cam, const Eigen::Vector2d& pixel);

enum class TrajectoryKind { Straight, Arc, Orbit, Zigzag };

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::Arc;
  double length_m = 6.0;          // total path length
  int n_frames = 40;
  double turn_rate_deg = 12.0;    // arc: yaw per frame
  double orbit_radius_m = 3.0;    // orbit: circle radius
  double zigzag_angle_deg = 10.0; // zigzag: heading half-angle
  int zigzag_period = 2;          // frames per heading block
  bool ramp_speed = false;        // linear speed ramp instead of constant
  double frame_dt_s = 0.1;
};

TrajectoryKind trajectory_kind_from_string(const std::string& s);

struct Sequence {
  Scene scene;
  CameraIntrinsics intrinsics;
  int downsample = 8;
  std::vector<double> timestamps;
  std::vector<Pose> poses;            // world_from_camera, ground truth
  std::vector<ColorImage> images;
  std::vector<Grid> depth_full;       // per frame, image resolution
  std::vector<Grid> depth_grid;       // per frame, optimization resolution

  int n_frames() const { return static_cast<int>(poses.size()); }
};

/// Deterministic render of the trajectory through the scene. Throws
/// FrustumViolation if any ray misses geometry or violates the depth bounds.
Sequence generate_sequence(const Scene& scene, const TrajectorySpec& traj,
                           const CameraIntrinsics& K, int downsample);

struct Correspondence {
  std::vector<Eigen::Vector2d> target;  // frame-j pixel per grid cell of i
  BoolGrid visible;
};

/// Exact reprojection of frame i's grid into frame j using ground-truth pose
/// and depth; visibility is false for cells whose transformed depth differs
/// from frame j's rendered depth by more than 1% (occlusion) or that leave
/// the frame.
Correspondence gt_correspondence(const Sequence& seq, int frame_i,
                                 int frame_j);

}  // namespace dgvo

#endif  // DGVO_SYNTH_WORLD_HPP
