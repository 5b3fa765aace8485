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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "geometry.hpp"
#include "rng.hpp"

using namespace dgvo;

namespace {

Pose random_pose(Rng& rng, double max_angle = 2.5, double max_trans = 5.0) {
  Eigen::Vector3d axis(rng.gaussian(), rng.gaussian(), rng.gaussian());
  axis.normalize();
  const double angle = rng.uniform(0.0, max_angle);
  Pose p;
  p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis));
  p.translation = max_trans * Eigen::Vector3d(rng.uniform(-1, 1),
                                              rng.uniform(-1, 1),
                                              rng.uniform(-1, 1));
  return p;
}

CameraIntrinsics test_intrinsics() {
  CameraIntrinsics K;
  K.fx = 80;
  K.fy = 82;
  K.cx = 47.5;
  K.cy = 46.5;
  K.width = 96;
  K.height = 96;
  return K;
}

}  // namespace

TEST_CASE("relative_pose identity cases") {
  const Pose id = Pose::identity();
  const Pose rel = relative_pose(id, id);
  CHECK(rel.translation.norm() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(rel.rotation.angularDistance(Eigen::Quaterniond::Identity()) ==
        doctest::Approx(0.0).epsilon(1e-15));

  Pose tj;
  tj.translation = {1, 0, 0};
  const Pose rel2 = relative_pose(id, tj);
  CHECK(rel2.translation.x() == doctest::Approx(-1.0));
  CHECK(rel2.translation.y() == doctest::Approx(0.0));
  CHECK(rel2.translation.z() == doctest::Approx(0.0));
}

TEST_CASE("relative_pose matches homogeneous matrix oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const Pose rel = relative_pose(a, b);
    const Eigen::Matrix4d oracle = b.matrix().inverse() * a.matrix();
    CHECK((rel.matrix() - oracle).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("backproject principal ray and errors") {
  CameraIntrinsics K;
  K.fx = K.fy = 1;
  K.cx = K.cy = 0;
  K.width = K.height = 2;
  const Eigen::Vector3d p = backproject(K, {0, 0}, 1.0);
  CHECK(p.x() == 0.0);
  CHECK(p.y() == 0.0);
  CHECK(p.z() == 1.0);
  CHECK_THROWS_AS(backproject(K, {0, 0}, 0.0), Error);
  CHECK_THROWS_AS(backproject(K, {0, 0}, -1.0), Error);
}

TEST_CASE("project/backproject round trip") {
  const CameraIntrinsics K = test_intrinsics();
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector2d pix(rng.uniform(0, K.width - 1),
                              rng.uniform(0, K.height - 1));
    const double depth = rng.uniform(0.3, 50.0);
    const Eigen::Vector2d back = project(K, backproject(K, pix, depth));
    CHECK((back - pix).norm() < 1e-10);
  }
}

TEST_CASE("backproject matches symbolic pinhole oracle") {
  const CameraIntrinsics K = test_intrinsics();
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const double u = rng.uniform(0, K.width - 1);
    const double v = rng.uniform(0, K.height - 1);
    const double z = rng.uniform(0.5, 20.0);
    const Eigen::Vector3d p = backproject(K, {u, v}, z);
    CHECK(std::abs(p.x() - (u - K.cx) / K.fx * z) < 1e-12);
    CHECK(std::abs(p.y() - (v - K.cy) / K.fy * z) < 1e-12);
    CHECK(p.z() == z);
  }
}

TEST_CASE("se3 exp/log inverse pair") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Vector3d axis(rng.gaussian(), rng.gaussian(), rng.gaussian());
    axis.normalize();
    const double angle = rng.uniform(1e-4, M_PI - 0.1);
    Twist xi;
    xi.head<3>() = angle * axis;
    xi.tail<3>() = Eigen::Vector3d(rng.uniform(-3, 3), rng.uniform(-3, 3),
                                   rng.uniform(-3, 3));
    const Twist back = se3_log(se3_exp(xi));
    CHECK((back - xi).norm() < 1e-9);
  }
}

TEST_CASE("exp(log(P)) = P for rotations below pi") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose p = random_pose(rng, M_PI - 0.1);
    const Pose q = se3_exp(se3_log(p));
    CHECK((q.matrix() - p.matrix()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("composition associativity") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    const Pose left = a.compose(b).compose(c);
    const Pose right = a.compose(b.compose(c));
    CHECK((left.matrix() - right.matrix()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("pose inverse composes to identity") {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose p = random_pose(rng);
    const Pose id = p.compose(p.inverse());
    CHECK(id.translation.norm() < 1e-9);
    CHECK(id.rotation.angularDistance(Eigen::Quaterniond::Identity()) < 1e-9);
  }
}

TEST_CASE("reproject with identity pose returns the input grid") {
  const CameraIntrinsics K = test_intrinsics();
  const int ds = 8;
  Grid depth(K.width / ds, K.height / ds, 3.7);
  const ReprojectionMap map = reproject(K, Pose::identity(), depth, ds);
  int idx = 0;
  for (int gy = 0; gy < depth.height; ++gy) {
    for (int gx = 0; gx < depth.width; ++gx, ++idx) {
      REQUIRE(map.valid[idx]);
      CHECK(std::abs(map.pixels[idx].x() - grid_center(gx, ds)) < 1e-12);
      CHECK(std::abs(map.pixels[idx].y() - grid_center(gy, ds)) < 1e-12);
    }
  }
}

TEST_CASE("pure z-translation matches per-cell closed form") {
  const CameraIntrinsics K = test_intrinsics();
  const int ds = 8;
  const double d = 5.0;
  const double tz = 1.0;
  Grid depth(K.width / ds, K.height / ds, d);
  Pose j_from_i;
  j_from_i.translation = {0, 0, -tz};  // camera j is tz behind i
  const ReprojectionMap map = reproject(K, j_from_i, depth, ds);
  int idx = 0;
  for (int gy = 0; gy < depth.height; ++gy) {
    for (int gx = 0; gx < depth.width; ++gx, ++idx) {
      if (!map.valid[idx]) continue;
      // closed form: scaling of normalized coordinates by d/(d - tz)
      const double x = grid_center(gx, ds), y = grid_center(gy, ds);
      const double s = d / (d - tz);
      const double ex = K.cx + (x - K.cx) * s;
      const double ey = K.cy + (y - K.cy) * s;
      CHECK(std::abs(map.pixels[idx].x() - ex) < 1e-9);
      CHECK(std::abs(map.pixels[idx].y() - ey) < 1e-9);
    }
  }
}

TEST_CASE("points behind the camera are masked invalid") {
  const CameraIntrinsics K = test_intrinsics();
  const int ds = 8;
  Grid depth(K.width / ds, K.height / ds, 2.0);
  Pose j_from_i;
  j_from_i.translation = {0, 0, -10.0};  // puts all points behind camera j
  const ReprojectionMap map = reproject(K, j_from_i, depth, ds);
  CHECK(map.valid.count() == 0);
}

TEST_CASE("retraction by zero twist is a no-op") {
  Rng rng(12);
  const Pose p = random_pose(rng);
  const Pose q = retract(p, Twist::Zero());
  CHECK((q.matrix() - p.matrix()).cwiseAbs().maxCoeff() < 1e-15);
}
