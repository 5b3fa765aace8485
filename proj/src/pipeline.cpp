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

#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rng.hpp"

namespace dgvo {

namespace {

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) {
    throw Error(ErrorCode::ConfigError, "field '" + field + "': " + why);
  }
}

}  // namespace

void PipelineConfig::validate() const {
  require(alpha > 1.0, "alpha", "must be > 1");
  require(lambda_reg >= 0.0, "lambda_reg", "must be >= 0");
  require(window_size >= 2, "window_size", "must be >= 2");
  require(edge_radius >= 1, "edge_radius", "must be >= 1");
  require(flow_steps >= 1, "flow_steps", "must be >= 1");
  require(ba_iters_per_step >= 1, "ba_iters_per_step", "must be >= 1");
  require(mvs_trigger_iteration >= 1 &&
              mvs_trigger_iteration <= flow_steps * ba_iters_per_step,
          "mvs_trigger_iteration", "must be in [1, flow_steps*ba_iters_per_step]");
  require(warmup_keyframes >= 2, "warmup_keyframes", "must be >= 2");
  require(keyframe_flow_threshold_px >= 0.0, "keyframe_flow_threshold_px",
          "must be >= 0");
  require(nonkeyframe_flow_steps >= 1, "nonkeyframe_flow_steps", "must be >= 1");
  require(nonkeyframe_refs >= 1, "nonkeyframe_refs", "must be >= 1");
  require(constant_init_depth_m > 0.0, "constant_init_depth_m", "must be > 0");
  require(huber_delta_px > 0.0, "huber_delta_px", "must be > 0");
  require(init_damping >= 0.0, "init_damping", "must be >= 0");
  require(inv_depth_min > 0.0 && inv_depth_max > inv_depth_min,
          "inv_depth_min", "need 0 < inv_depth_min < inv_depth_max");
  require(confidence_drop_fraction >= 0.0 && confidence_drop_fraction < 1.0,
          "confidence_drop_fraction", "must be in [0, 1)");
  require(global_edge_radius >= 1, "global_edge_radius", "must be >= 1");
  require(global_ba_iters >= 1, "global_ba_iters", "must be >= 1");
  require(dpt_scale > 0.0, "dpt_scale", "must be > 0");
  require(priors.mono_rel_sigma >= 0.0, "priors.mono_rel_sigma", "must be >= 0");
  require(priors.mvs_rel_sigma >= 0.0, "priors.mvs_rel_sigma", "must be >= 0");
  require(priors.flow_sigma_px >= 0.0, "priors.flow_sigma_px", "must be >= 0");
  require(priors.flow_shared_fraction >= 0.0 && priors.flow_shared_fraction <= 1.0,
          "priors.flow_shared_fraction", "must be in [0, 1]");
  require(priors.flow_residual_beta_max >= 0.0 && priors.flow_residual_beta_max < 1.0,
          "priors.flow_residual_beta_max", "must be in [0, 1)");
  require(priors.flow_residual_m0_px > 0.0, "priors.flow_residual_m0_px",
          "must be > 0");
  require(priors.flow_depth_gain >= 0.0, "priors.flow_depth_gain",
          "must be >= 0");
  require(priors.flow_noise_scale_cap >= 1.0, "priors.flow_noise_scale_cap",
          "must be >= 1");
  require(priors.outlier_fraction >= 0.0 && priors.outlier_fraction < 1.0,
          "priors.outlier_fraction", "must be in [0, 1)");
  require(priors.outlier_scale >= 0.0 && priors.outlier_scale < 1.0,
          "priors.outlier_scale", "must be in [0, 1)");
  require(priors.corrupt_fraction >= 0.0 && priors.corrupt_fraction <= 1.0,
          "priors.corrupt_fraction", "must be in [0, 1]");
  require(priors.corrupt_factor > 0.0, "priors.corrupt_factor", "must be > 0");
  if (priors.source == PriorSource::None) {
    require(gate_mode == GateMode::NeverOn, "gate_mode",
            "must be 'never_on' when priors.source is 'none'");
    require(!priors.use_mvs, "priors.use_mvs",
            "must be false when priors.source is 'none'");
  }
  if (priors.source == PriorSource::Files) {
    require(!priors.depth_dir.empty(), "priors.depth_dir",
            "required when priors.source is 'files'");
    require(!priors.use_mvs, "priors.use_mvs",
            "must be false when priors.source is 'files'");
  }
}

Keyframe init_frame(int id, double timestamp, const ColorImage& image,
                    const CameraIntrinsics& K, int downsample,
                    const Pose& init_pose, const DepthPrior* prior,
                    double constant_depth_m, double inv_depth_min,
                    double inv_depth_max, bool require_prior) {
  if (require_prior && prior == nullptr) {
    throw Error(ErrorCode::MissingPrior,
                "frame " + std::to_string(id) + " has no depth prior");
  }
  Keyframe kf;
  kf.id = id;
  kf.timestamp = timestamp;
  kf.image = image;
  kf.intrinsics = K;
  kf.pose = init_pose;
  const int gw = K.width / downsample;
  const int gh = K.height / downsample;
  kf.inv_depth = Grid(gw, gh, 1.0 / constant_depth_m);
  kf.pixel_mask = BoolGrid(gw, gh, true);
  if (prior != nullptr) {
    kf.mono_prior = *prior;
    kf.has_mono_prior = true;
    for (int i = 0; i < kf.inv_depth.size(); ++i) {
      if (prior->valid[i]) {
        kf.inv_depth[i] =
            std::clamp(1.0 / prior->depth[i], inv_depth_min, inv_depth_max);
      }
    }
  }
  return kf;
}

namespace {

class PipelineRunner {
 public:
  PipelineRunner(const PipelineConfig& config, const Sequence& seq)
      : cfg_(config), seq_(seq) {
    cfg_.validate();
    if (seq.n_frames() < cfg_.warmup_keyframes + 1) {
      throw Error(ErrorCode::ConfigError,
                  "field 'trajectory.n_frames': sequence must have at least "
                  "warmup_keyframes + 1 frames");
    }
    graph_.window_size = cfg_.window_size;
    graph_.warmup_size = cfg_.warmup_keyframes;
    gate_.alpha = cfg_.alpha;
  }

  PipelineResult run() {
    const int n = seq_.n_frames();
    result_.poses.assign(n, Pose{});
    result_.timestamps = seq_.timestamps;
    result_.diagnostics.resize(n);
    for (int f = 0; f < n; ++f) {
      result_.diagnostics[f].frame_id = f;
      result_.diagnostics[f].timestamp = seq_.timestamps[f];
    }

    for (int f = 0; f < n; ++f) {
      try {
        process_frame(f);
      } catch (const Error& e) {
        throw Error(ErrorCode::PipelineError,
                    "frame " + std::to_string(f) + ": " + e.what());
      }
    }

    if (cfg_.run_global_ba) run_global_refinement();

    // keyframe poses: archived at slide-out state, window at final state
    for (const ArchivedKeyframe& a : graph_.archive) {
      result_.poses[a.keyframe.id] = a.keyframe.pose;
    }
    for (const Keyframe& kf : graph_.keyframes) {
      result_.poses[kf.id] = kf.pose;
    }

    result_.gate = gate_;
    result_.graph = std::move(graph_);
    result_.n_keyframes = total_admitted_;
    return result_;
  }

 private:
  void process_frame(int f) {
    if (graph_.keyframes.empty()) {
      admit_keyframe(f, Pose::identity());
      return;
    }

    const int prev_kf = graph_.keyframes.back().id;
    const double flow_mag = mean_gt_flow(prev_kf, f);
    const bool forced = static_cast<int>(graph_.keyframes.size()) < 2 &&
                        graph_.archive.empty();
    if (forced || admit_frame(flow_mag, cfg_.keyframe_flow_threshold_px)) {
      admit_keyframe(f, graph_.keyframes.back().pose);
    } else {
      track_nonkeyframe(f);
    }
  }

  // ---- priors ---------------------------------------------------------

  bool frame_corrupted(int f) const {
    if (cfg_.priors.corrupt_fraction <= 0.0 || !graph_.initialized) return false;
    Rng rng(mix_seed(cfg_.seed, static_cast<uint64_t>(f), 0xc0));
    return rng.uniform() < cfg_.priors.corrupt_fraction;
  }

  std::optional<DepthPrior> mono_prior_for(int f) {
    switch (cfg_.priors.source) {
      case PriorSource::None:
        return std::nullopt;
      case PriorSource::Synthetic: {
        NoiseModel noise;
        noise.depth_rel_sigma = cfg_.priors.mono_rel_sigma;
        noise.seed = cfg_.seed;
        const bool corrupted = frame_corrupted(f);
        result_.diagnostics[f].prior_corrupted = corrupted;
        const double corrupt = corrupted ? cfg_.priors.corrupt_factor : 1.0;
        DepthPrior prior = synth_mono_prior(
            seq_.depth_grid[f], noise, mix_seed(cfg_.seed, f, 0x30), corrupt);
        if (cfg_.priors.realign_threshold >= 0.0) {
          prior.depth = align_prior(prior.depth, seq_.depth_grid[f],
                                    cfg_.priors.realign_threshold);
        }
        return prior;
      }
      case PriorSource::Files: {
        char name[64];
        std::snprintf(name, sizeof(name), "depth_%06d.rdepth", f);
        const Grid& ref = seq_.depth_grid[f];
        DepthPrior prior = load_depth_file(cfg_.priors.depth_dir + "/" + name,
                                           ref.width, ref.height);
        if (cfg_.priors.file_relative) {
          DepthPrior converted =
              metric_from_relative(prior.depth, cfg_.dpt_scale, cfg_.dpt_shift);
          for (int i = 0; i < prior.depth.size(); ++i) {
            if (!prior.valid[i]) converted.valid.set(i, false);
          }
          converted.kind = PriorKind::File;
          return converted;
        }
        return prior;
      }
    }
    return std::nullopt;
  }

  // ---- flow machinery -------------------------------------------------

  const Correspondence& corr(int i, int j) {
    const auto key = std::make_pair(i, j);
    auto it = corr_cache_.find(key);
    if (it == corr_cache_.end()) {
      it = corr_cache_.emplace(key, gt_correspondence(seq_, i, j)).first;
    }
    return it->second;
  }

  NoiseModel flow_noise() const {
    NoiseModel noise;
    noise.flow_sigma_px = cfg_.priors.flow_sigma_px;
    noise.flow_shared_fraction = cfg_.priors.flow_shared_fraction;
    noise.outlier_fraction = cfg_.priors.outlier_fraction;
    noise.outlier_scale = cfg_.priors.outlier_scale;
    noise.seed = cfg_.seed;
    return noise;
  }

  // Flow errors model a network's systematic error for a frame pair: the
  // noise draw is persistent per (i, j), not resampled per refresh.
  // Resampling white noise at every flow step makes the joint pose-depth
  // refit chase it and contract the scale gauge (regression dilution);
  // correlated errors, like real flow models produce, do not.
  // Median relative inverse-depth error of the source state against the
  // ground-truth grid; drives the flow provider's accuracy.
  double depth_init_error(int i, const Grid& inv_depth) const {
    const Grid& gt = seq_.depth_grid[i];
    std::vector<double> err;
    err.reserve(inv_depth.size());
    for (int k = 0; k < inv_depth.size(); ++k) {
      const double u = inv_depth[k];
      if (!(u > 0.0) || !(gt[k] > 0.0)) continue;
      err.push_back(std::abs(u * gt[k] - 1.0));
    }
    if (err.empty()) return 0.0;
    std::nth_element(err.begin(), err.begin() + err.size() / 2, err.end());
    return err[err.size() / 2];
  }

  const FlowObservation& make_flow(int i, int j,
                                   const Grid* src_inv_depth = nullptr) {
    const auto key = std::make_pair(i, j);
    auto it = flow_cache_.find(key);
    if (it == flow_cache_.end()) {
      NoiseModel noise = flow_noise();
      const Grid* state = src_inv_depth;
      if (state == nullptr) {
        const Keyframe* kf = graph_.find(i);
        if (kf != nullptr) state = &kf->inv_depth;
      }
      if (state != nullptr && noise.flow_sigma_px > 0.0) {
        const double scale =
            std::min(1.0 + cfg_.priors.flow_depth_gain *
                               depth_init_error(i, *state),
                     cfg_.priors.flow_noise_scale_cap);
        noise.flow_sigma_px *= scale;
      }
      it = flow_cache_
               .emplace(key, oracle_flow_from_correspondence(
                                 corr(i, j), seq_.intrinsics.width, noise,
                                 mix_seed(static_cast<uint64_t>(i) * 1000003u +
                                              static_cast<uint64_t>(j),
                                          0xf1),
                                 mix_seed(0x50c0, static_cast<uint64_t>(i), 0)))
               .first;
    }
    return it->second;
  }

  // Admission statistic: mean displacement of the exact correspondence over
  // every cell that projects in front of the camera. Restricting this to
  // fully visible cells would bias it low exactly when motion is large
  // (near cells leave the frame first) and delay keyframe admission.
  double mean_gt_flow(int i, int j) {
    const Correspondence& c = corr(i, j);
    const Grid& depth = seq_.depth_grid[i];
    double sum = 0.0;
    long count = 0;
    int idx = 0;
    for (int gy = 0; gy < depth.height; ++gy) {
      for (int gx = 0; gx < depth.width; ++gx, ++idx) {
        if (c.target[idx] == Eigen::Vector2d::Zero() && !c.visible[idx]) {
          continue;  // behind the camera, target undefined
        }
        const Eigen::Vector2d p(grid_center(gx, seq_.downsample),
                                grid_center(gy, seq_.downsample));
        sum += (c.target[idx] - p).norm();
        ++count;
      }
    }
    return count > 0 ? sum / count : 0.0;
  }

  void refresh_flows(FrameGraph& graph) {
    for (Edge& e : graph.edges) track_flow(graph, e);
  }

  // One flow-estimation step for an edge: start from the oracle observation
  // and keep a misfit-dependent fraction of the current reprojection error,
  // mirroring a residual-flow predictor whose accuracy degrades with the
  // initial flow error. With beta_max = 0 the delivered targets are the raw
  // oracle observation.
  void track_flow(const FrameGraph& graph, Edge& e) {
    const Keyframe* src_kf = graph.find(e.src);
    const FlowObservation& oracle =
        make_flow(e.src, e.dst, src_kf ? &src_kf->inv_depth : nullptr);
    const double beta_max = cfg_.priors.flow_residual_beta_max;
    if (beta_max <= 0.0) {
      if (e.flow.empty()) e.flow = oracle;
      return;
    }
    const Keyframe* src = graph.find(e.src);
    const Keyframe* dst = graph.find(e.dst);
    FlowObservation out = oracle;
    const CameraIntrinsics& K = src->intrinsics;
    const int f = K.width / src->inv_depth.width;
    const Pose j_from_i = relative_pose(src->pose, dst->pose);
    const Eigen::Matrix3d R = j_from_i.rotation.toRotationMatrix();
    const Eigen::Vector3d& t = j_from_i.translation;
    const double m0_sq =
        cfg_.priors.flow_residual_m0_px * cfg_.priors.flow_residual_m0_px;
    int idx = 0;
    for (int gy = 0; gy < src->inv_depth.height; ++gy) {
      for (int gx = 0; gx < src->inv_depth.width; ++gx, ++idx) {
        if (!oracle.valid[idx]) continue;
        const double u = src->inv_depth[idx];
        if (!(u > 0.0)) continue;
        const Eigen::Vector2d pix(grid_center(gx, f), grid_center(gy, f));
        const Eigen::Vector3d p_j = R * (pixel_ray(K, pix) / u) + t;
        if (p_j.z() <= kMinDepth) continue;
        const Eigen::Vector2d err = project(K, p_j) - oracle.target[idx];
        const double m_sq = err.squaredNorm();
        const double beta = beta_max * m_sq / (m_sq + m0_sq);
        out.target[idx] = oracle.target[idx] + beta * err;
      }
    }
    e.flow = std::move(out);
  }

  // Mean ||target - reproject(current state)|| over active cells; mirrors
  // the residual the flow stage would still have to explain.
  double residual_flow(const FrameGraph& graph) const {
    double sum = 0.0;
    long count = 0;
    for (const Edge& e : graph.edges) {
      if (e.flow.empty()) continue;
      const Keyframe* src = graph.find(e.src);
      const Keyframe* dst = graph.find(e.dst);
      if (src == nullptr || dst == nullptr) continue;
      const CameraIntrinsics& K = src->intrinsics;
      const int f = K.width / src->inv_depth.width;
      const Pose j_from_i = relative_pose(src->pose, dst->pose);
      const Eigen::Matrix3d R = j_from_i.rotation.toRotationMatrix();
      const Eigen::Vector3d& t = j_from_i.translation;
      int idx = 0;
      for (int gy = 0; gy < src->inv_depth.height; ++gy) {
        for (int gx = 0; gx < src->inv_depth.width; ++gx, ++idx) {
          if (!e.flow.valid[idx] || !src->pixel_mask[idx]) continue;
          if (e.flow.confidence[idx] <= 0.0) continue;
          const double u = src->inv_depth[idx];
          if (!(u > 0.0)) continue;
          const Eigen::Vector2d pix(grid_center(gx, f), grid_center(gy, f));
          const Eigen::Vector3d p_j = R * (pixel_ray(K, pix) / u) + t;
          if (p_j.z() <= kMinDepth) continue;
          sum += (e.flow.target[idx] - project(K, p_j)).norm();
          ++count;
        }
      }
    }
    return count > 0 ? sum / count : 0.0;
  }

  // ---- keyframe path --------------------------------------------------

  BAProblem window_problem() {
    BAProblem problem;
    problem.graph = &graph_;
    problem.lambda_reg = cfg_.lambda_reg;
    problem.mode = BAMode::Full;
    problem.fixed_pose_ids = {graph_.keyframes.front().id};
    problem.huber_delta_px = cfg_.huber_delta_px;
    problem.init_damping = cfg_.init_damping;
    problem.inv_depth_min = cfg_.inv_depth_min;
    problem.inv_depth_max = cfg_.inv_depth_max;
    return problem;
  }

  void admit_keyframe(int f, const Pose& init_pose) {
    std::optional<DepthPrior> prior = mono_prior_for(f);
    Keyframe kf = init_frame(
        f, seq_.timestamps[f], seq_.images[f], seq_.intrinsics,
        seq_.downsample, init_pose, prior ? &*prior : nullptr,
        cfg_.constant_init_depth_m, cfg_.inv_depth_min, cfg_.inv_depth_max,
        /*require_prior=*/cfg_.priors.source != PriorSource::None);

    graph_.keyframes.push_back(std::move(kf));
    ++total_admitted_;
    graph_.total_admitted = total_admitted_;
    if (total_admitted_ >= cfg_.warmup_keyframes) graph_.initialized = true;
    slide_window(graph_);
    apply_edge_pairs(graph_, build_edges(graph_, cfg_.edge_radius));

    FrameDiagnostics& diag = result_.diagnostics[f];
    diag.is_keyframe = true;
    keyframe_update(f, diag);
    result_.poses[f] = graph_.keyframes.back().pose;

    if (total_admitted_ == cfg_.warmup_keyframes) {
      set_gate_reference(graph_, gate_);
    }
  }

  void keyframe_update(int f, FrameDiagnostics& diag) {
    Keyframe& kf = graph_.keyframes.back();
    const bool warmup = total_admitted_ <= cfg_.warmup_keyframes;
    kf.gate_C = 0;

    const bool has_edges = !graph_.edges.empty();
    BAProblem problem = window_problem();
    int mvs_countdown = cfg_.mvs_trigger_iteration;
    bool mvs_done = false;

    auto run_iters = [&](int iters) {
      if (iters <= 0) return;
      if (has_edges) run_ba(problem, iters);
      diag.ba_iterations += iters;
      mvs_countdown -= iters;
      if (!mvs_done && mvs_countdown <= 0) {
        mvs_checkpoint(f, diag);
        mvs_done = true;
      }
    };

    for (int step = 0; step < cfg_.flow_steps; ++step) {
      refresh_flows(graph_);
      ++diag.flow_updates;
      diag.residual_flow.push_back(residual_flow(graph_));

      if (step == 0) {
        // first BA iteration runs alone so the gate can read the pose it
        // produced before the remaining iterations commit to a C value
        run_iters(1);
        decide_gate(f, warmup, diag);
        run_iters(cfg_.ba_iters_per_step - 1 > 0 ? cfg_.ba_iters_per_step - 1
                                                 : 0);
      } else {
        run_iters(cfg_.ba_iters_per_step);
      }
    }
    diag.residual_flow.push_back(residual_flow(graph_));
  }

  void decide_gate(int f, bool warmup, FrameDiagnostics& diag) {
    Keyframe& kf = graph_.keyframes.back();
    double eta = std::numeric_limits<double>::quiet_NaN();
    if (kf.has_mono_prior && !graph_.edges.empty()) {
      Grid init_inv_depth(kf.inv_depth.width, kf.inv_depth.height, 0.0);
      for (int i = 0; i < init_inv_depth.size(); ++i) {
        if (kf.mono_prior.valid[i]) {
          init_inv_depth[i] = 1.0 / kf.mono_prior.depth[i];
        }
      }
      eta = photometric_error(graph_, kf.id, init_inv_depth);
    }
    diag.eta_prime = eta;

    int C = 0;
    if (!warmup) {
      switch (cfg_.gate_mode) {
        case GateMode::Adaptive:
          C = (kf.has_mono_prior && std::isfinite(eta)) ? depth_gate(eta, gate_)
                                                        : 0;
          break;
        case GateMode::AlwaysOn:
          C = kf.has_prior() ? 1 : 0;
          break;
        case GateMode::NeverOn:
          C = 0;
          break;
      }
    }
    kf.gate_C = C;
    diag.gate_C = C;
    gate_.decisions.push_back({kf.id, eta, C});
  }

  void mvs_checkpoint(int f, FrameDiagnostics& diag) {
    diag.mvs_checked = true;
    if (!cfg_.priors.use_mvs || cfg_.priors.source != PriorSource::Synthetic) {
      return;
    }
    // MVS needs usable intermediate poses; the warmup graph does not have
    // them yet, so guidance starts with the first post-warmup keyframe.
    if (!graph_.initialized || total_admitted_ <= cfg_.warmup_keyframes) return;
    const int n = static_cast<int>(graph_.keyframes.size());
    if (n < 3) return;

    const Keyframe& k0 = graph_.keyframes[n - 3];
    const Keyframe& k1 = graph_.keyframes[n - 2];
    Keyframe& k2 = graph_.keyframes[n - 1];
    MvsGateInput input;
    input.t_prev = k1.pose.translation - k0.pose.translation;
    input.t_curr = k2.pose.translation - k1.pose.translation;
    if (!mvs_gate(input)) return;

    const double pose_error =
        (k2.pose.translation - seq_.poses[k2.id].translation).norm();
    NoiseModel noise;
    noise.depth_rel_sigma = cfg_.priors.mvs_rel_sigma;
    noise.seed = cfg_.seed;
    DepthPrior mvs = synth_mvs_prior(seq_.depth_grid[k2.id], pose_error, noise,
                                     mix_seed(cfg_.seed, f, 0x3d5));

    const ConfidenceMask mask =
        confidence_mask(*mvs.confidence, mvs.valid, cfg_.confidence_drop_fraction);
    for (int i = 0; i < k2.inv_depth.size(); ++i) {
      if (mask.keep[i]) {
        k2.inv_depth[i] = std::clamp(1.0 / mvs.depth[i], cfg_.inv_depth_min,
                                     cfg_.inv_depth_max);
      } else {
        // unreliable cells keep their optimized value but leave the problem
        k2.pixel_mask.set(i, false);
      }
    }
    k2.mvs_prior = std::move(mvs);
    diag.mvs_applied = true;
  }

  // ---- non-keyframe path ----------------------------------------------

  void track_nonkeyframe(int f) {
    FrameDiagnostics& diag = result_.diagnostics[f];
    diag.is_keyframe = false;

    const int n_refs = std::min<int>(cfg_.nonkeyframe_refs,
                                     static_cast<int>(graph_.keyframes.size()));
    FrameGraph mini;
    mini.window_size = n_refs + 1;
    std::set<int> fixed;
    for (int k = n_refs; k >= 1; --k) {
      const Keyframe& ref = graph_.keyframes[graph_.keyframes.size() - k];
      mini.keyframes.push_back(ref);
      fixed.insert(ref.id);
    }

    std::optional<DepthPrior> prior;
    Keyframe kf;
    if (cfg_.fast_mode) {
      // fast variant: reuse the nearest keyframe's depth, skip the prior
      const Keyframe& nearest = graph_.keyframes.back();
      kf = init_frame(f, seq_.timestamps[f], seq_.images[f], seq_.intrinsics,
                      seq_.downsample, nearest.pose, nullptr,
                      cfg_.constant_init_depth_m, cfg_.inv_depth_min,
                      cfg_.inv_depth_max, /*require_prior=*/false);
      kf.inv_depth = nearest.inv_depth;
    } else {
      prior = mono_prior_for(f);
      kf = init_frame(f, seq_.timestamps[f], seq_.images[f], seq_.intrinsics,
                      seq_.downsample, graph_.keyframes.back().pose,
                      prior ? &*prior : nullptr, cfg_.constant_init_depth_m,
                      cfg_.inv_depth_min, cfg_.inv_depth_max,
                      /*require_prior=*/cfg_.priors.source != PriorSource::None);
    }
    mini.keyframes.push_back(std::move(kf));

    std::vector<EdgePair> pairs;
    for (int k = 0; k < n_refs; ++k) {
      pairs.push_back({mini.keyframes[k].id, f});
      pairs.push_back({f, mini.keyframes[k].id});
    }
    apply_edge_pairs(mini, pairs);

    BAProblem problem;
    problem.graph = &mini;
    problem.mode = BAMode::PoseOnly;
    problem.fixed_pose_ids = fixed;
    problem.huber_delta_px = cfg_.huber_delta_px;
    problem.init_damping = cfg_.init_damping;

    for (int step = 0; step < cfg_.nonkeyframe_flow_steps; ++step) {
      for (Edge& e : mini.edges) track_flow(mini, e);
      ++diag.flow_updates;
      run_ba(problem, cfg_.ba_iters_per_step);
      diag.ba_iterations += cfg_.ba_iters_per_step;
    }
    result_.poses[f] = mini.keyframes.back().pose;
  }

  // ---- global refinement ----------------------------------------------

  void run_global_refinement() {
    FrameGraph merged;
    merged.warmup_size = graph_.warmup_size;
    merged.initialized = graph_.initialized;
    for (ArchivedKeyframe& a : graph_.archive) {
      merged.keyframes.push_back(std::move(a.keyframe));
    }
    for (Keyframe& kf : graph_.keyframes) {
      merged.keyframes.push_back(std::move(kf));
    }
    merged.window_size = static_cast<int>(merged.keyframes.size());
    merged.total_admitted = graph_.total_admitted;
    // carry over the final window observations so a single-window sequence
    // refines exactly the graph it ended with
    merged.edges = std::move(graph_.edges);

    BAProblem problem;
    problem.graph = &merged;
    problem.lambda_reg = cfg_.lambda_reg;
    problem.mode = BAMode::Full;
    problem.huber_delta_px = cfg_.huber_delta_px;
    problem.init_damping = cfg_.init_damping;
    problem.inv_depth_min = cfg_.inv_depth_min;
    problem.inv_depth_max = cfg_.inv_depth_max;

    global_ba(problem, cfg_.global_edge_radius, cfg_.global_ba_iters,
              [this](int i, int j) { return make_flow(i, j); });

    graph_.archive.clear();
    graph_.keyframes = std::move(merged.keyframes);
    graph_.edges = std::move(merged.edges);
    graph_.window_size = merged.window_size;
  }

  PipelineConfig cfg_;
  const Sequence& seq_;
  FrameGraph graph_;
  GateState gate_;
  PipelineResult result_;
  int total_admitted_ = 0;
  std::map<std::pair<int, int>, Correspondence> corr_cache_;
  std::map<std::pair<int, int>, FlowObservation> flow_cache_;
};

}  // namespace

PipelineResult run_sequence(const PipelineConfig& config, const Sequence& seq) {
  PipelineRunner runner(config, seq);
  return runner.run();
}

}  // namespace dgvo
