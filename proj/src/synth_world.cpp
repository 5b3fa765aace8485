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

#include "synth_world.hpp"

#include <cmath>

#include "rng.hpp"

namespace dgvo {

namespace {

double lattice_value(uint64_t seed, int64_t ix, int64_t iy, int64_t iz,
                     int channel) {
  uint64_t h = mix_seed(seed, static_cast<uint64_t>(ix) * 0x8da6b343ull,
                        static_cast<uint64_t>(iy) * 0xd8163841ull,
                        static_cast<uint64_t>(iz) * 0xcb1ab31full);
  uint64_t s = h ^ (0x9e3779b97f4a7c15ull * static_cast<uint64_t>(channel + 1));
  uint64_t v = splitmix64(s);
  return static_cast<double>(v >> 11) * 0x1.0p-52 - 1.0;  // [-1, 1)
}

double smootherstep(double t) { return t * t * t * (t * (6 * t - 15) + 10); }

double value_noise(uint64_t seed, const Eigen::Vector3d& p, int channel) {
  const int64_t ix = static_cast<int64_t>(std::floor(p.x()));
  const int64_t iy = static_cast<int64_t>(std::floor(p.y()));
  const int64_t iz = static_cast<int64_t>(std::floor(p.z()));
  const double fx = smootherstep(p.x() - ix);
  const double fy = smootherstep(p.y() - iy);
  const double fz = smootherstep(p.z() - iz);

  double acc[2][2];
  for (int dy = 0; dy < 2; ++dy) {
    for (int dz = 0; dz < 2; ++dz) {
      const double a = lattice_value(seed, ix, iy + dy, iz + dz, channel);
      const double b = lattice_value(seed, ix + 1, iy + dy, iz + dz, channel);
      acc[dy][dz] = a + fx * (b - a);
    }
  }
  const double y0 = acc[0][0] + fz * (acc[0][1] - acc[0][0]);
  const double y1 = acc[1][0] + fz * (acc[1][1] - acc[1][0]);
  return y0 + fy * (y1 - y0);
}

SurfacePlane wall(const Eigen::Vector3d& point, const Eigen::Vector3d& normal) {
  SurfacePlane p;
  p.point = point;
  p.normal = normal.normalized();
  p.bounded = false;
  return p;
}

SurfacePlane patch(const Eigen::Vector3d& point, const Eigen::Vector3d& normal,
                   double half_u, double half_v) {
  SurfacePlane p;
  p.point = point;
  p.normal = normal.normalized();
  p.bounded = true;
  // build an orthonormal in-plane basis
  Eigen::Vector3d ref = std::abs(p.normal.x()) < 0.9
                            ? Eigen::Vector3d::UnitX()
                            : Eigen::Vector3d::UnitY();
  p.u_axis = p.normal.cross(ref).normalized();
  p.v_axis = p.normal.cross(p.u_axis).normalized();
  p.half_u = half_u;
  p.half_v = half_v;
  return p;
}

}  // namespace

Scene make_scene(SceneKind kind, uint64_t seed, bool constant_texture) {
  Scene scene;
  scene.texture.seed = seed;
  scene.texture.constant = constant_texture;
  scene.texture.base = {0.52, 0.48, 0.5};
  scene.texture.channel_gains << 0.040, 0.012, -0.020,
                                -0.016, 0.036, 0.022,
                                 0.018, -0.024, 0.034;
  scene.texture.noise_amplitude = 0.08;
  scene.texture.noise_scale_m = 8.0;
  scene.texture.speckle_sigma = kind == SceneKind::Room ? 0.004 : 0.0;

  if (kind == SceneKind::Room) {
    // Closed box around the trajectory volume; normals point inward.
    scene.planes.push_back(wall({0, 0, 8.5}, {0.06, -0.04, -1}));
    scene.planes.push_back(wall({0, 0, -4.5}, {-0.05, 0.03, 1}));
    scene.planes.push_back(wall({4.5, 0, 0}, {-1, 0.05, 0.04}));
    scene.planes.push_back(wall({-4.5, 0, 0}, {1, 0.04, -0.06}));
    scene.planes.push_back(wall({0, 3.5, 0}, {0.03, -1, 0.05}));
    scene.planes.push_back(wall({0, -3.5, 0}, {-0.04, 1, 0.03}));
    // Interior patches give strong depth layering and occlusions; they are
    // kept clear of the central corridor so forward trajectories up to
    // ~6.5 m never come closer than min_hit_depth to geometry.
    scene.planes.push_back(patch({1.5, 0.4, 4.3}, {-0.3, 0.1, -1}, 1.0, 0.8));
    scene.planes.push_back(patch({-1.7, -0.6, 5.1}, {0.25, -0.15, -1}, 1.2, 0.9));
    scene.planes.push_back(patch({0.4, 1.9, 6.3}, {0.1, 0.3, -1}, 1.4, 0.7));
    scene.planes.push_back(patch({-2.9, 0.8, 2.7}, {0.8, 0.1, -0.6}, 0.8, 1.1));
    scene.min_hit_depth = 0.5;
    scene.max_hit_depth = 100.0;
  } else {
    // Frontal scene: one near-perpendicular smooth surface, no depth
    // discontinuities, extra smooth texture. Keeps the photometric floor at
    // ground truth far below any gate threshold.
    scene.texture.noise_amplitude = 0.05;
    scene.texture.noise_scale_m = 10.0;
    scene.planes.push_back(wall({0, 0, 10.0}, {0.05, -0.03, -1}));
    scene.min_hit_depth = 0.5;
    scene.max_hit_depth = 100.0;
  }
  return scene;
}

Eigen::Vector3d scene_color(const Scene& scene, const Eigen::Vector3d& p) {
  const SceneTexture& tex = scene.texture;
  if (tex.constant) return tex.base;
  Eigen::Vector3d c = tex.base + tex.channel_gains * p;
  const Eigen::Vector3d q = p / tex.noise_scale_m;
  for (int ch = 0; ch < 3; ++ch) {
    c[ch] += tex.noise_amplitude * value_noise(tex.seed, q, ch);
  }
  if (tex.speckle_sigma > 0.0) {
    // piecewise-constant cells, uniform in [-sqrt(3), sqrt(3)] * sigma
    const Eigen::Vector3d s = p / tex.speckle_cell_m;
    const int64_t ix = static_cast<int64_t>(std::floor(s.x()));
    const int64_t iy = static_cast<int64_t>(std::floor(s.y()));
    const int64_t iz = static_cast<int64_t>(std::floor(s.z()));
    constexpr double kSqrt3 = 1.7320508075688772;
    for (int ch = 0; ch < 3; ++ch) {
      c[ch] += tex.speckle_sigma * kSqrt3 *
               lattice_value(tex.seed ^ 0x5ec1eull, ix, iy, iz, ch);
    }
  }
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

namespace {

// Nearest surface hit along o + t*d (t in units of d); negative if none.
double intersect(const Scene& scene, const Eigen::Vector3d& o,
                 const Eigen::Vector3d& d) {
  constexpr double kTMin = 1e-2;
  double best = -1.0;
  for (const SurfacePlane& pl : scene.planes) {
    const double denom = d.dot(pl.normal);
    if (std::abs(denom) < 1e-12) continue;
    const double t = (pl.point - o).dot(pl.normal) / denom;
    if (t <= kTMin) continue;
    if (pl.bounded) {
      const Eigen::Vector3d rel = o + t * d - pl.point;
      if (std::abs(rel.dot(pl.u_axis)) > pl.half_u ||
          std::abs(rel.dot(pl.v_axis)) > pl.half_v) {
        continue;
      }
    }
    if (best < 0.0 || t < best) best = t;
  }
  return best;
}

}  // namespace

double raycast_depth(const Scene& scene, const CameraIntrinsics& K,
                     const Pose& world_from_cam, const Eigen::Vector2d& pixel) {
  const Eigen::Vector3d dir_cam = pixel_ray(K, pixel);
  const Eigen::Vector3d dir_world = world_from_cam.rotation * dir_cam;
  // dir_cam.z == 1, so the ray parameter equals camera-frame depth.
  return intersect(scene, world_from_cam.translation, dir_world);
}

TrajectoryKind trajectory_kind_from_string(const std::string& s) {
  if (s == "straight") return TrajectoryKind::Straight;
  if (s == "arc") return TrajectoryKind::Arc;
  if (s == "orbit") return TrajectoryKind::Orbit;
  if (s == "zigzag") return TrajectoryKind::Zigzag;
  throw Error(ErrorCode::ConfigError, "unknown trajectory kind '" + s + "'");
}

namespace {

Pose yaw_pose(const Eigen::Vector3d& position, double yaw) {
  Pose p;
  p.translation = position;
  p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()));
  return p;
}

std::vector<Pose> make_trajectory(const TrajectorySpec& traj) {
  // Pipeline-ready sequences need warmup+1 frames; that is enforced at the
  // experiment-config level so short diagnostic trajectories stay possible.
  const int n = traj.n_frames;
  if (n < 2) {
    throw Error(ErrorCode::ConfigError,
                "trajectory.n_frames must be >= 2, got " + std::to_string(n));
  }
  const int steps = n - 1;
  const double mean_step = traj.length_m / steps;
  auto step_len = [&](int k) {
    if (!traj.ramp_speed) return mean_step;
    // linear ramp 0.5x -> 1.5x, same total length
    const double f = steps > 1 ? static_cast<double>(k) / (steps - 1) : 0.0;
    return mean_step * (0.5 + f);
  };

  std::vector<Pose> poses;
  poses.reserve(n);
  switch (traj.kind) {
    case TrajectoryKind::Straight: {
      double x = 0.0;
      for (int k = 0; k < n; ++k) {
        poses.push_back(yaw_pose({x, 0, 0}, 0.0));
        x += step_len(k);
      }
      break;
    }
    case TrajectoryKind::Arc: {
      const double turn = traj.turn_rate_deg * M_PI / 180.0;
      Eigen::Vector3d pos = Eigen::Vector3d::Zero();
      double yaw = 0.0;
      for (int k = 0; k < n; ++k) {
        poses.push_back(yaw_pose(pos, yaw));
        const Eigen::Vector3d forward(std::sin(yaw), 0, std::cos(yaw));
        pos += step_len(k) * forward;
        yaw += turn;
      }
      break;
    }
    case TrajectoryKind::Orbit: {
      const Eigen::Vector3d center(0, 0, traj.orbit_radius_m);
      const double dtheta = traj.length_m / steps / traj.orbit_radius_m;
      for (int k = 0; k < n; ++k) {
        const double theta = k * dtheta;
        const Eigen::Vector3d pos =
            center + traj.orbit_radius_m *
                         Eigen::Vector3d(-std::sin(theta), 0, -std::cos(theta));
        poses.push_back(yaw_pose(pos, theta));
      }
      break;
    }
    case TrajectoryKind::Zigzag: {
      const double psi = traj.zigzag_angle_deg * M_PI / 180.0;
      const int period = std::max(1, traj.zigzag_period);
      Eigen::Vector3d pos = Eigen::Vector3d::Zero();
      for (int k = 0; k < n; ++k) {
        poses.push_back(yaw_pose(pos, 0.0));
        const double heading = ((k / period) % 2 == 0) ? psi : -psi;
        pos += step_len(k) *
               Eigen::Vector3d(std::sin(heading), 0, std::cos(heading));
      }
      break;
    }
  }
  return poses;
}

}  // namespace

Sequence generate_sequence(const Scene& scene, const TrajectorySpec& traj,
                           const CameraIntrinsics& K, int downsample) {
  if (!K.valid()) {
    throw Error(ErrorCode::ConfigError, "invalid camera intrinsics");
  }
  if (downsample < 1 || K.width % downsample != 0 ||
      K.height % downsample != 0) {
    throw Error(ErrorCode::ConfigError,
                "downsample must divide the image size");
  }

  Sequence seq;
  seq.scene = scene;
  seq.intrinsics = K;
  seq.downsample = downsample;
  seq.poses = make_trajectory(traj);

  const int gw = K.width / downsample;
  const int gh = K.height / downsample;

  for (int f = 0; f < static_cast<int>(seq.poses.size()); ++f) {
    const Pose& pose = seq.poses[f];
    seq.timestamps.push_back(f * traj.frame_dt_s);

    ColorImage img(K.width, K.height);
    Grid depth(K.width, K.height);
    for (int y = 0; y < K.height; ++y) {
      for (int x = 0; x < K.width; ++x) {
        const Eigen::Vector2d pix(x, y);
        const double d = raycast_depth(scene, K, pose, pix);
        if (d < scene.min_hit_depth || d > scene.max_hit_depth) {
          throw Error(ErrorCode::FrustumViolation,
                      "ray missed scene at frame " + std::to_string(f) +
                          " pixel (" + std::to_string(x) + "," +
                          std::to_string(y) + ")");
        }
        depth.at(x, y) = d;
        const Eigen::Vector3d dir = pose.rotation * pixel_ray(K, pix);
        img.set(x, y, scene_color(scene, pose.translation + d * dir));
      }
    }

    Grid dgrid(gw, gh);
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        const Eigen::Vector2d pix(grid_center(gx, downsample),
                                  grid_center(gy, downsample));
        const double d = raycast_depth(scene, K, pose, pix);
        if (d < scene.min_hit_depth || d > scene.max_hit_depth) {
          throw Error(ErrorCode::FrustumViolation,
                      "grid ray missed scene at frame " + std::to_string(f));
        }
        dgrid.at(gx, gy) = d;
      }
    }

    seq.images.push_back(std::move(img));
    seq.depth_full.push_back(std::move(depth));
    seq.depth_grid.push_back(std::move(dgrid));
  }
  return seq;
}

namespace {

// Depth at an integer pixel: exact raycast for generated sequences, stored
// map lookup for loaded ones.
double pixel_depth(const Sequence& seq, int frame, int x, int y) {
  if (seq.scene.planes.empty()) return seq.depth_full[frame].at(x, y);
  return raycast_depth(seq.scene, seq.intrinsics, seq.poses[frame],
                       {static_cast<double>(x), static_cast<double>(y)});
}

// True when the bilinear footprint of (x, y) in `frame` sits on one surface
// near the expected depth. Cells straddling a depth discontinuity mix colors
// from different surfaces and would poison photometric comparisons, so flow
// correspondences treat them like occlusions.
bool support_consistent(const Sequence& seq, int frame, double x, double y,
                        double expected_depth) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const int px = std::clamp(x0 + dx, 0, seq.intrinsics.width - 1);
      const int py = std::clamp(y0 + dy, 0, seq.intrinsics.height - 1);
      const double d = pixel_depth(seq, frame, px, py);
      if (!(d > 0.0) || std::abs(d - expected_depth) > 0.1 * expected_depth) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

Correspondence gt_correspondence(const Sequence& seq, int frame_i,
                                 int frame_j) {
  const Grid& depth_i = seq.depth_grid.at(frame_i);
  const CameraIntrinsics& K = seq.intrinsics;
  const Pose j_from_i = relative_pose(seq.poses.at(frame_i), seq.poses.at(frame_j));

  Correspondence out;
  out.target.assign(static_cast<size_t>(depth_i.size()),
                    Eigen::Vector2d::Zero());
  out.visible = BoolGrid(depth_i.width, depth_i.height, false);

  int idx = 0;
  for (int gy = 0; gy < depth_i.height; ++gy) {
    for (int gx = 0; gx < depth_i.width; ++gx, ++idx) {
      const Eigen::Vector2d pix(grid_center(gx, seq.downsample),
                                grid_center(gy, seq.downsample));
      const Eigen::Vector3d p_i = pixel_ray(K, pix) * depth_i[idx];
      const Eigen::Vector3d p_j = j_from_i.apply(p_i);
      if (p_j.z() <= kMinDepth) continue;
      const Eigen::Vector2d q = project(K, p_j);
      out.target[idx] = q;
      if (!inside_image(q.x(), q.y(), K.width, K.height)) continue;
      // Generated sequences carry the scene and get exact visibility; loaded
      // ones fall back to the stored depth map.
      const double rendered =
          seq.scene.planes.empty()
              ? bilinear(seq.depth_full[frame_j], q.x(), q.y())
              : raycast_depth(seq.scene, K, seq.poses[frame_j], q);
      if (!(rendered > 0.0) ||
          std::abs(rendered - p_j.z()) > 0.01 * p_j.z()) {
        continue;  // occluded
      }
      if (!support_consistent(seq, frame_i, pix.x(), pix.y(), depth_i[idx]) ||
          !support_consistent(seq, frame_j, q.x(), q.y(), p_j.z())) {
        continue;  // footprint crosses a depth edge
      }
      out.visible.set(idx, true);
    }
  }
  return out;
}

}  // namespace dgvo
