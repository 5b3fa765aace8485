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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "priors.hpp"
#include "raster_io.hpp"

using namespace dgvo;

namespace {

Correspondence flat_correspondence(int w, int h) {
  Correspondence corr;
  corr.target.assign(static_cast<size_t>(w) * h, Eigen::Vector2d(10.0, 20.0));
  corr.visible = BoolGrid(w, h, true);
  return corr;
}

Sequence tiny_sequence() {
  CameraIntrinsics K;
  K.fx = K.fy = 40;
  K.cx = K.cy = 23.5;
  K.width = K.height = 48;
  TrajectorySpec t;
  t.kind = TrajectoryKind::Arc;
  t.length_m = 2.0;
  t.n_frames = 14;
  t.turn_rate_deg = 10.0;
  return generate_sequence(make_scene(SceneKind::Room, 3), t, K, 8);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<int> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (size_t k = 0; k < order.size(); ++k) r[order[k]] = double(k);
    return r;
  };
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double n = double(a.size());
  const double mean = (n - 1) / 2.0;
  double cov = 0, va = 0, vb = 0;
  for (size_t k = 0; k < a.size(); ++k) {
    cov += (ra[k] - mean) * (rb[k] - mean);
    va += (ra[k] - mean) * (ra[k] - mean);
    vb += (rb[k] - mean) * (rb[k] - mean);
  }
  return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("noiseless oracle flow reproduces the exact correspondence") {
  const Sequence seq = tiny_sequence();
  const Correspondence corr = gt_correspondence(seq, 2, 4);
  NoiseModel noise;  // all zero
  const FlowObservation obs = oracle_flow(seq, 2, 4, noise, 99);
  for (int i = 0; i < corr.visible.size(); ++i) {
    if (!corr.visible[i]) {
      CHECK(obs.confidence[i] == 0.0);
      CHECK(!obs.valid[i]);
      continue;
    }
    CHECK((obs.target[i] - corr.target[i]).norm() < 1e-6);
    CHECK(obs.confidence[i] == 1.0);
  }
}

TEST_CASE("oracle flow is deterministic per seed") {
  const Correspondence corr = flat_correspondence(40, 40);
  NoiseModel noise;
  noise.flow_sigma_px = 1.3;
  noise.outlier_fraction = 0.05;
  noise.outlier_scale = 0.2;
  noise.seed = 17;
  const FlowObservation a = oracle_flow_from_correspondence(corr, 100, noise, 4, 1);
  const FlowObservation b = oracle_flow_from_correspondence(corr, 100, noise, 4, 1);
  const FlowObservation c = oracle_flow_from_correspondence(corr, 100, noise, 5, 1);
  CHECK(a.confidence.data == b.confidence.data);
  bool same_targets = true, differs_from_c = false;
  for (size_t i = 0; i < a.target.size(); ++i) {
    same_targets = same_targets && a.target[i] == b.target[i];
    differs_from_c = differs_from_c || a.target[i] != c.target[i];
  }
  CHECK(same_targets);
  CHECK(differs_from_c);
}

TEST_CASE("injected flow noise has the configured standard deviation") {
  const Correspondence corr = flat_correspondence(100, 100);
  NoiseModel noise;
  noise.flow_sigma_px = 1.0;
  noise.seed = 3;
  const FlowObservation obs =
      oracle_flow_from_correspondence(corr, 100, noise, 21, 2);
  double sum = 0, sum_sq = 0;
  long n = 0;
  for (size_t i = 0; i < obs.target.size(); ++i) {
    const Eigen::Vector2d eps = obs.target[i] - corr.target[i];
    for (int k = 0; k < 2; ++k) {
      sum += eps[k];
      sum_sq += eps[k] * eps[k];
      ++n;
    }
  }
  const double mean = sum / n;
  const double std = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std > 0.95);
  CHECK(std < 1.05);
}

TEST_CASE("outliers carry zero confidence") {
  const Correspondence corr = flat_correspondence(100, 100);
  NoiseModel noise;
  noise.flow_sigma_px = 0.5;
  noise.outlier_fraction = 0.1;
  noise.outlier_scale = 0.3;
  noise.seed = 3;
  const FlowObservation obs =
      oracle_flow_from_correspondence(corr, 100, noise, 77, 3);
  int outliers = 0;
  for (int i = 0; i < obs.confidence.size(); ++i) {
    const double disp = (obs.target[i] - corr.target[i]).norm();
    if (obs.confidence[i] == 0.0 && obs.valid[i]) {
      ++outliers;
    } else {
      CHECK(disp < 0.5 * 6);  // inliers stay within a few sigma
    }
  }
  CHECK(outliers > 0.05 * corr.visible.size());
  CHECK(outliers < 0.15 * corr.visible.size());
}

TEST_CASE("mono prior with zero noise equals ground truth") {
  Grid gt(20, 20, 4.2);
  NoiseModel noise;
  const DepthPrior prior = synth_mono_prior(gt, noise, 1);
  CHECK(prior.kind == PriorKind::Monocular);
  for (int i = 0; i < gt.size(); ++i) CHECK(prior.depth[i] == gt[i]);
}

TEST_CASE("corruption factor 3 gives mean relative error 2") {
  Grid gt(20, 20, 4.2);
  NoiseModel noise;
  const DepthPrior prior = synth_mono_prior(gt, noise, 1, 3.0);
  double err = 0;
  for (int i = 0; i < gt.size(); ++i) {
    err += std::abs(prior.depth[i] - gt[i]) / gt[i];
  }
  CHECK(err / gt.size() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("mono prior relative noise matches the configured sigma") {
  Grid gt(100, 100, 0.0);
  for (int i = 0; i < gt.size(); ++i) gt[i] = 2.0 + 0.01 * (i % 7);
  NoiseModel noise;
  noise.depth_rel_sigma = 0.05;
  noise.seed = 11;
  const DepthPrior prior = synth_mono_prior(gt, noise, 2);
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < gt.size(); ++i) {
    const double rel = (prior.depth[i] - gt[i]) / gt[i];
    sum += rel;
    sum_sq += rel * rel;
  }
  const double mean = sum / gt.size();
  const double std = std::sqrt(sum_sq / gt.size() - mean * mean);
  CHECK(std > 0.045);
  CHECK(std < 0.055);
}

TEST_CASE("mvs prior: exact at zero error, degrades with pose error") {
  Grid gt(40, 40, 6.0);
  NoiseModel clean;
  const DepthPrior exact = synth_mvs_prior(gt, 0.0, clean, 5);
  for (int i = 0; i < gt.size(); ++i) {
    CHECK(exact.depth[i] == gt[i]);
    CHECK((*exact.confidence)[i] == 1.0);
  }

  NoiseModel noise;
  noise.depth_rel_sigma = 0.02;
  noise.seed = 9;
  auto mean_rel_err = [&](double pose_err) {
    const DepthPrior p = synth_mvs_prior(gt, pose_err, noise, 6);
    double err = 0;
    for (int i = 0; i < gt.size(); ++i) {
      err += std::abs(p.depth[i] - gt[i]) / gt[i];
    }
    return err / gt.size();
  };
  const double e0 = mean_rel_err(0.0);
  const double e1 = mean_rel_err(0.05);
  const double e2 = mean_rel_err(0.2);
  CHECK(e0 < e1);
  CHECK(e1 < e2);
}

TEST_CASE("mvs confidence ranks inversely with the injected error") {
  Grid gt(50, 50, 5.0);
  NoiseModel noise;
  noise.depth_rel_sigma = 0.05;
  noise.seed = 13;
  const DepthPrior p = synth_mvs_prior(gt, 0.02, noise, 7);
  std::vector<double> conf, neg_err;
  for (int i = 0; i < gt.size(); ++i) {
    conf.push_back((*p.confidence)[i]);
    neg_err.push_back(-std::abs(p.depth[i] - gt[i]) / gt[i]);
  }
  CHECK(spearman(conf, neg_err) > 0.9);
}

TEST_CASE("depth file round trip is bitwise for float payloads") {
  const std::string path = "test_depth_roundtrip.rdepth";
  Grid g(7, 5);
  for (int i = 0; i < g.size(); ++i) g[i] = 0.25f * (i + 1);
  write_depth_file(path, g);
  const DepthPrior prior = load_depth_file(path);
  CHECK(prior.kind == PriorKind::File);
  REQUIRE(prior.depth.width == 7);
  REQUIRE(prior.depth.height == 5);
  for (int i = 0; i < g.size(); ++i) {
    CHECK(prior.depth[i] == g[i]);
    CHECK(prior.valid[i]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("non-positive depth cells load as invalid") {
  const std::string path = "test_depth_invalid.rdepth";
  Grid g(4, 4, 2.0);
  g[5] = 0.0;
  g[7] = -1.0;
  write_depth_file(path, g);
  const DepthPrior prior = load_depth_file(path);
  CHECK(!prior.valid[5]);
  CHECK(!prior.valid[7]);
  CHECK(prior.valid[0]);
  std::filesystem::remove(path);
}

TEST_CASE("truncated depth file raises FormatError with an offset") {
  const std::string path = "test_depth_truncated.rdepth";
  Grid g(8, 8, 1.0);
  write_depth_file(path, g);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 9);
  try {
    load_depth_file(path);
    FAIL("expected FormatError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FormatError);
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("dimension mismatch is rejected") {
  const std::string path = "test_depth_dims.rdepth";
  write_depth_file(path, Grid(6, 4, 1.0));
  try {
    load_depth_file(path, 5, 4);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
  std::filesystem::remove(path);
}

TEST_CASE("bad header raises FormatError") {
  const std::string path = "test_depth_badheader.rdepth";
  std::ofstream(path) << "NOTDEPTH v1 4 4\n";
  CHECK_THROWS_AS(load_depth_file(path), Error);
  std::filesystem::remove(path);
}

TEST_CASE("shared noise component repeats across a source frame's edges") {
  const Correspondence corr = flat_correspondence(30, 30);
  NoiseModel noise;
  noise.flow_sigma_px = 1.0;
  noise.flow_shared_fraction = 1.0;  // fully systematic
  noise.seed = 5;
  // same shared seed, different pair seeds: identical targets
  const FlowObservation a = oracle_flow_from_correspondence(corr, 100, noise, 1, 42);
  const FlowObservation b = oracle_flow_from_correspondence(corr, 100, noise, 2, 42);
  for (size_t i = 0; i < a.target.size(); ++i) CHECK(a.target[i] == b.target[i]);

  // a mixed split decorrelates them again
  noise.flow_shared_fraction = 0.5;
  const FlowObservation c = oracle_flow_from_correspondence(corr, 100, noise, 1, 42);
  const FlowObservation d = oracle_flow_from_correspondence(corr, 100, noise, 2, 42);
  bool any_diff = false;
  for (size_t i = 0; i < c.target.size(); ++i) {
    any_diff = any_diff || c.target[i] != d.target[i];
  }
  CHECK(any_diff);
}
