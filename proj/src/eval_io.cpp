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

#include "eval_io.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "raster_io.hpp"

namespace dgvo {

namespace {

constexpr double kAssocWindowS = 0.02;

struct Association {
  std::vector<int> est_idx;
  std::vector<int> gt_idx;
};

// Nearest-timestamp matching; each ground-truth pose claimed at most once.
Association associate(const Trajectory& est, const Trajectory& gt) {
  Association assoc;
  std::vector<char> claimed(gt.entries.size(), 0);
  int cursor = 0;
  for (int i = 0; i < est.size(); ++i) {
    const double t = est.entries[i].timestamp;
    while (cursor + 1 < gt.size() &&
           std::abs(gt.entries[cursor + 1].timestamp - t) <=
               std::abs(gt.entries[cursor].timestamp - t)) {
      ++cursor;
    }
    int best = -1;
    double best_dt = kAssocWindowS;
    for (int j = std::max(0, cursor - 1);
         j <= std::min(gt.size() - 1, cursor + 1); ++j) {
      const double dt = std::abs(gt.entries[j].timestamp - t);
      if (!claimed[j] && dt <= best_dt) {
        best_dt = dt;
        best = j;
      }
    }
    if (best >= 0) {
      claimed[best] = 1;
      assoc.est_idx.push_back(i);
      assoc.gt_idx.push_back(best);
    }
  }
  return assoc;
}

Sim3Alignment align_from_association(const Trajectory& est,
                                     const Trajectory& gt,
                                     const Association& assoc,
                                     bool with_scale) {
  const int n = static_cast<int>(assoc.est_idx.size());
  if (n < 3) {
    throw Error(ErrorCode::AssociationFailure,
                "need >= 3 associated poses, got " + std::to_string(n));
  }
  Eigen::MatrixXd src(3, n), dst(3, n);
  for (int k = 0; k < n; ++k) {
    src.col(k) = est.entries[assoc.est_idx[k]].pose.translation;
    dst.col(k) = gt.entries[assoc.gt_idx[k]].pose.translation;
  }

  // collinear estimates leave the rotation about the line unconstrained
  const Eigen::MatrixXd centered = src.colwise() - src.rowwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  if (svd.singularValues()(1) <= 1e-9 * std::max(svd.singularValues()(0), 1e-30)) {
    throw Error(ErrorCode::DegenerateGeometry,
                "estimate positions are collinear");
  }

  const Eigen::Matrix4d T = Eigen::umeyama(src, dst, with_scale);
  const Eigen::Matrix3d L = T.block<3, 3>(0, 0);
  Sim3Alignment out;
  out.scale = with_scale ? std::cbrt(L.determinant()) : 1.0;
  out.rotation = Eigen::Quaterniond(Eigen::Matrix3d(L / out.scale));
  out.rotation.normalize();
  out.translation = T.block<3, 1>(0, 3);
  return out;
}

double rmse_after(const Trajectory& est, const Trajectory& gt,
                  const Association& assoc, const Sim3Alignment& align,
                  std::vector<double>* series = nullptr) {
  double sum = 0.0;
  for (size_t k = 0; k < assoc.est_idx.size(); ++k) {
    const Eigen::Vector3d p =
        align.apply(est.entries[assoc.est_idx[k]].pose.translation);
    const double err =
        (p - gt.entries[assoc.gt_idx[k]].pose.translation).norm();
    if (series != nullptr) series->push_back(err);
    sum += err * err;
  }
  return std::sqrt(sum / assoc.est_idx.size());
}

}  // namespace

Sim3Alignment umeyama_align(const Trajectory& est, const Trajectory& gt,
                            bool with_scale) {
  return align_from_association(est, gt, associate(est, gt), with_scale);
}

double ate(const Trajectory& est, const Trajectory& gt) {
  const Association assoc = associate(est, gt);
  return rmse_after(est, gt, assoc,
                    align_from_association(est, gt, assoc, false));
}

double rte(const Trajectory& est, const Trajectory& gt) {
  const Association assoc = associate(est, gt);
  return rmse_after(est, gt, assoc,
                    align_from_association(est, gt, assoc, true));
}

MetricsReport evaluate_trajectories(const Trajectory& est,
                                    const Trajectory& gt) {
  const Association assoc = associate(est, gt);
  const Sim3Alignment rigid = align_from_association(est, gt, assoc, false);
  const Sim3Alignment sim = align_from_association(est, gt, assoc, true);

  MetricsReport report;
  report.ate_m = rmse_after(est, gt, assoc, rigid, &report.ate_series);
  report.rte_m = rmse_after(est, gt, assoc, sim, &report.rte_series);
  report.scale = sim.scale;
  for (size_t k = 0; k < assoc.est_idx.size(); ++k) {
    report.frame_timestamps.push_back(
        est.entries[assoc.est_idx[k]].timestamp);
    const Eigen::Quaterniond q_est =
        rigid.rotation * est.entries[assoc.est_idx[k]].pose.rotation;
    const Eigen::Quaterniond q_gt = gt.entries[assoc.gt_idx[k]].pose.rotation;
    const double angle = Eigen::AngleAxisd(q_gt.conjugate() * q_est).angle();
    report.max_rot_err_rad = std::max(report.max_rot_err_rad, angle);
  }
  return report;
}

TrajectoryReadResult read_trajectory_tum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);

  TrajectoryReadResult out;
  std::string line;
  int line_no = 0;
  double prev_ts = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) +
                      ": expected 8 fields 'timestamp tx ty tz qx qy qz qw'");
    }
    std::string extra;
    if (ls >> extra) {
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) + ": trailing fields");
    }
    if (!(ts > prev_ts)) {
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) +
                      ": timestamps must be strictly increasing");
    }
    prev_ts = ts;

    Eigen::Quaterniond q(qw, qx, qy, qz);
    const double norm = q.norm();
    if (!(norm > 1e-6)) {
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) +
                      ": quaternion norm is zero");
    }
    if (std::abs(norm - 1.0) > 1e-3) {
      out.warnings.push_back(path + ":" + std::to_string(line_no) +
                             ": quaternion norm " + std::to_string(norm) +
                             " normalized");
    }
    q.normalize();
    Pose pose;
    pose.rotation = q;
    pose.translation = {tx, ty, tz};
    out.trajectory.push(ts, pose);
  }
  return out;
}

void write_trajectory_tum(const std::string& path, const Trajectory& traj) {
  for (int i = 1; i < traj.size(); ++i) {
    if (!(traj.entries[i].timestamp > traj.entries[i - 1].timestamp)) {
      throw Error(ErrorCode::ParseError,
                  "trajectory timestamps must be strictly increasing");
    }
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  char buf[256];
  for (const TrajectoryEntry& e : traj.entries) {
    const Eigen::Quaterniond& q = e.pose.rotation;
    const Eigen::Vector3d& t = e.pose.translation;
    std::snprintf(buf, sizeof(buf),
                  "%.15g %.15g %.15g %.15g %.15g %.15g %.15g %.15g\n",
                  e.timestamp, t.x(), t.y(), t.z(), q.x(), q.y(), q.z(),
                  q.w());
    out << buf;
  }
  if (!out) throw Error(ErrorCode::IoError, "short write: " + path);
}

long export_pointcloud(const FrameGraph& graph, const std::string& path) {
  struct ColoredPoint {
    Eigen::Vector3d p;
    Eigen::Vector3d c;
  };
  std::vector<ColoredPoint> points;

  auto add_keyframe = [&points](const Keyframe& kf) {
    const CameraIntrinsics& K = kf.intrinsics;
    const int f = K.width / kf.inv_depth.width;
    int idx = 0;
    for (int gy = 0; gy < kf.inv_depth.height; ++gy) {
      for (int gx = 0; gx < kf.inv_depth.width; ++gx, ++idx) {
        if (!kf.pixel_mask[idx]) continue;
        const double u = kf.inv_depth[idx];
        if (!(u > 0.0) || !std::isfinite(u)) continue;
        const Eigen::Vector2d pix(grid_center(gx, f), grid_center(gy, f));
        const Eigen::Vector3d p_cam = pixel_ray(K, pix) / u;
        points.push_back(
            {kf.pose.apply(p_cam), bilinear(kf.image, pix.x(), pix.y())});
      }
    }
  };
  for (const ArchivedKeyframe& a : graph.archive) add_keyframe(a.keyframe);
  for (const Keyframe& kf : graph.keyframes) add_keyframe(kf);

  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  char buf[160];
  for (const ColoredPoint& pt : points) {
    const auto channel = [](double v) {
      return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    };
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %d %d %d\n", pt.p.x(),
                  pt.p.y(), pt.p.z(), channel(pt.c.x()), channel(pt.c.y()),
                  channel(pt.c.z()));
    out << buf;
  }
  if (!out) throw Error(ErrorCode::IoError, "short write: " + path);
  return static_cast<long>(points.size());
}

void export_sequence(const Sequence& seq, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  nlohmann::json meta;
  meta["width"] = seq.intrinsics.width;
  meta["height"] = seq.intrinsics.height;
  meta["fx"] = seq.intrinsics.fx;
  meta["fy"] = seq.intrinsics.fy;
  meta["cx"] = seq.intrinsics.cx;
  meta["cy"] = seq.intrinsics.cy;
  meta["downsample"] = seq.downsample;
  meta["n_frames"] = seq.n_frames();
  std::ofstream(dir + "/meta.json") << meta.dump(2) << "\n";

  Trajectory gt;
  for (int f = 0; f < seq.n_frames(); ++f) gt.push(seq.timestamps[f], seq.poses[f]);
  write_trajectory_tum(dir + "/gt.txt", gt);

  char name[64];
  for (int f = 0; f < seq.n_frames(); ++f) {
    std::snprintf(name, sizeof(name), "/image_%06d.rimg", f);
    write_image_file(dir + name, seq.images[f]);
    std::snprintf(name, sizeof(name), "/depth_%06d.rdepth", f);
    write_depth_file(dir + name, seq.depth_full[f]);
  }
}

Sequence load_sequence(const std::string& dir) {
  std::ifstream meta_in(dir + "/meta.json");
  if (!meta_in) throw Error(ErrorCode::IoError, "cannot open " + dir + "/meta.json");
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, dir + "/meta.json: " + e.what());
  }

  Sequence seq;
  seq.intrinsics.width = meta.at("width").get<int>();
  seq.intrinsics.height = meta.at("height").get<int>();
  seq.intrinsics.fx = meta.at("fx").get<double>();
  seq.intrinsics.fy = meta.at("fy").get<double>();
  seq.intrinsics.cx = meta.at("cx").get<double>();
  seq.intrinsics.cy = meta.at("cy").get<double>();
  seq.downsample = meta.at("downsample").get<int>();
  const int n = meta.at("n_frames").get<int>();

  const TrajectoryReadResult gt = read_trajectory_tum(dir + "/gt.txt");
  if (gt.trajectory.size() != n) {
    throw Error(ErrorCode::FormatError,
                dir + "/gt.txt: expected " + std::to_string(n) + " poses");
  }

  const int gw = seq.intrinsics.width / seq.downsample;
  const int gh = seq.intrinsics.height / seq.downsample;
  char name[64];
  for (int f = 0; f < n; ++f) {
    seq.timestamps.push_back(gt.trajectory.entries[f].timestamp);
    seq.poses.push_back(gt.trajectory.entries[f].pose);
    std::snprintf(name, sizeof(name), "/image_%06d.rimg", f);
    seq.images.push_back(read_image_file(dir + name));
    std::snprintf(name, sizeof(name), "/depth_%06d.rdepth", f);
    Grid depth = read_depth_file(dir + name);
    if (depth.width != seq.intrinsics.width ||
        depth.height != seq.intrinsics.height) {
      throw Error(ErrorCode::DimensionMismatch,
                  std::string(name) + ": depth size mismatch");
    }
    Grid dgrid(gw, gh);
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        dgrid.at(gx, gy) = bilinear(depth, grid_center(gx, seq.downsample),
                                    grid_center(gy, seq.downsample));
      }
    }
    seq.depth_full.push_back(std::move(depth));
    seq.depth_grid.push_back(std::move(dgrid));
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

template <typename T>
T field(const json& j, const std::string& name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigError,
                "field '" + name + "': wrong type");
  }
}

GateMode gate_mode_from_string(const std::string& s) {
  if (s == "adaptive") return GateMode::Adaptive;
  if (s == "always_on") return GateMode::AlwaysOn;
  if (s == "never_on") return GateMode::NeverOn;
  throw Error(ErrorCode::ConfigError,
              "field 'pipeline.gate': unknown value '" + s + "'");
}

PriorSource prior_source_from_string(const std::string& s) {
  if (s == "synthetic") return PriorSource::Synthetic;
  if (s == "none") return PriorSource::None;
  if (s == "files") return PriorSource::Files;
  throw Error(ErrorCode::ConfigError,
              "field 'priors.source': unknown value '" + s + "'");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.name = field<std::string>(j, "experiment", "experiment");
  cfg.output_dir = field<std::string>(j, "output_dir", "");
  cfg.domain = field<std::string>(j, "domain", "indoor");
  cfg.export_pointcloud = field<bool>(j, "export_pointcloud", false);
  cfg.export_gt = field<bool>(j, "export_gt", true);

  if (cfg.domain == "indoor") {
    cfg.pipeline.alpha = 1.5;
    cfg.pipeline.dpt_scale = 0.000305;
    cfg.pipeline.dpt_shift = 0.1378;
  } else if (cfg.domain == "outdoor") {
    cfg.pipeline.alpha = 1.75;
    cfg.pipeline.dpt_scale = 0.00006016;
    cfg.pipeline.dpt_shift = 0.00579;
  } else {
    throw Error(ErrorCode::ConfigError,
                "field 'domain': must be 'indoor' or 'outdoor'");
  }

  cfg.pipeline.seed = field<uint64_t>(j, "seed", 7);

  const json p = j.value("pipeline", json::object());
  PipelineConfig& pl = cfg.pipeline;
  pl.alpha = field<double>(p, "alpha", pl.alpha);
  pl.lambda_reg = field<double>(p, "lambda_reg", pl.lambda_reg);
  pl.window_size = field<int>(p, "window_size", pl.window_size);
  pl.edge_radius = field<int>(p, "edge_radius", pl.edge_radius);
  pl.flow_steps = field<int>(p, "flow_steps", pl.flow_steps);
  pl.ba_iters_per_step = field<int>(p, "ba_iters_per_step", pl.ba_iters_per_step);
  pl.mvs_trigger_iteration =
      field<int>(p, "mvs_trigger_iteration", pl.mvs_trigger_iteration);
  pl.warmup_keyframes = field<int>(p, "warmup_keyframes", pl.warmup_keyframes);
  pl.fast_mode = field<bool>(p, "fast_mode", pl.fast_mode);
  pl.keyframe_flow_threshold_px = field<double>(
      p, "keyframe_flow_threshold_px", pl.keyframe_flow_threshold_px);
  pl.nonkeyframe_flow_steps =
      field<int>(p, "nonkeyframe_flow_steps", pl.nonkeyframe_flow_steps);
  pl.nonkeyframe_refs = field<int>(p, "nonkeyframe_refs", pl.nonkeyframe_refs);
  pl.constant_init_depth_m =
      field<double>(p, "constant_init_depth_m", pl.constant_init_depth_m);
  pl.huber_delta_px = field<double>(p, "huber_delta_px", pl.huber_delta_px);
  pl.init_damping = field<double>(p, "init_damping", pl.init_damping);
  pl.inv_depth_min = field<double>(p, "inv_depth_min", pl.inv_depth_min);
  pl.inv_depth_max = field<double>(p, "inv_depth_max", pl.inv_depth_max);
  pl.confidence_drop_fraction = field<double>(p, "confidence_drop_fraction",
                                              pl.confidence_drop_fraction);
  pl.run_global_ba = field<bool>(p, "global_ba", pl.run_global_ba);
  pl.global_edge_radius =
      field<int>(p, "global_edge_radius", pl.global_edge_radius);
  pl.global_ba_iters = field<int>(p, "global_ba_iters", pl.global_ba_iters);
  pl.gate_mode = gate_mode_from_string(
      field<std::string>(p, "gate", "adaptive"));

  const json pr = j.value("priors", json::object());
  PriorConfig& pc = pl.priors;
  pc.source =
      prior_source_from_string(field<std::string>(pr, "source", "synthetic"));
  pc.use_mvs = field<bool>(pr, "use_mvs",
                           pc.source == PriorSource::Synthetic);
  pc.mono_rel_sigma = field<double>(pr, "mono_rel_sigma", pc.mono_rel_sigma);
  pc.mvs_rel_sigma = field<double>(pr, "mvs_rel_sigma", pc.mvs_rel_sigma);
  pc.flow_sigma_px = field<double>(pr, "flow_sigma_px", pc.flow_sigma_px);
  pc.flow_shared_fraction =
      field<double>(pr, "flow_shared_fraction", pc.flow_shared_fraction);
  pc.flow_residual_beta_max =
      field<double>(pr, "flow_residual_beta_max", pc.flow_residual_beta_max);
  pc.flow_residual_m0_px =
      field<double>(pr, "flow_residual_m0_px", pc.flow_residual_m0_px);
  pc.flow_depth_gain = field<double>(pr, "flow_depth_gain", pc.flow_depth_gain);
  pc.flow_noise_scale_cap =
      field<double>(pr, "flow_noise_scale_cap", pc.flow_noise_scale_cap);
  pc.outlier_fraction =
      field<double>(pr, "outlier_fraction", pc.outlier_fraction);
  pc.outlier_scale = field<double>(pr, "outlier_scale", pc.outlier_scale);
  pc.corrupt_fraction =
      field<double>(pr, "corrupt_fraction", pc.corrupt_fraction);
  pc.corrupt_factor = field<double>(pr, "corrupt_factor", pc.corrupt_factor);
  pc.realign_threshold =
      field<double>(pr, "realign_threshold", pc.realign_threshold);
  pc.depth_dir = field<std::string>(pr, "depth_dir", "");
  pc.file_relative = field<bool>(pr, "file_relative", false);

  const json s = j.value("sequence", json::object());
  SequenceConfig& sq = cfg.sequence;
  const std::string source = field<std::string>(s, "source", "generate");
  if (source == "generate") {
    sq.generate = true;
  } else if (source == "load") {
    sq.generate = false;
    sq.path = field<std::string>(s, "path", "");
    if (sq.path.empty()) {
      throw Error(ErrorCode::ConfigError,
                  "field 'sequence.path': required when source is 'load'");
    }
  } else {
    throw Error(ErrorCode::ConfigError,
                "field 'sequence.source': must be 'generate' or 'load'");
  }
  const std::string scene = field<std::string>(s, "scene", "room");
  if (scene == "room") {
    sq.scene = SceneKind::Room;
  } else if (scene == "frontal") {
    sq.scene = SceneKind::Frontal;
  } else {
    throw Error(ErrorCode::ConfigError,
                "field 'sequence.scene': must be 'room' or 'frontal'");
  }
  sq.constant_texture = field<bool>(s, "constant_texture", false);
  sq.scene_seed = field<uint64_t>(s, "scene_seed", 3);
  sq.width = field<int>(s, "width", sq.width);
  sq.height = field<int>(s, "height", sq.height);
  sq.fx = field<double>(s, "fx", 0.0);
  sq.fy = field<double>(s, "fy", 0.0);
  sq.cx = field<double>(s, "cx", -1.0);
  sq.cy = field<double>(s, "cy", -1.0);
  if (sq.fx <= 0) sq.fx = 5.0 * sq.width / 6.0;
  if (sq.fy <= 0) sq.fy = sq.fx;
  if (sq.cx < 0) sq.cx = 0.5 * (sq.width - 1);
  if (sq.cy < 0) sq.cy = 0.5 * (sq.height - 1);
  sq.downsample = field<int>(s, "downsample", sq.downsample);
  if (sq.downsample < 1 || sq.width % sq.downsample != 0 ||
      sq.height % sq.downsample != 0) {
    throw Error(ErrorCode::ConfigError,
                "field 'sequence.downsample': must divide width and height");
  }

  const json t = s.value("trajectory", json::object());
  TrajectorySpec& tr = sq.trajectory;
  tr.kind = trajectory_kind_from_string(
      field<std::string>(t, "kind", "arc"));
  tr.length_m = field<double>(t, "length_m", tr.length_m);
  tr.n_frames = field<int>(t, "n_frames", tr.n_frames);
  tr.turn_rate_deg = field<double>(t, "turn_rate_deg", tr.turn_rate_deg);
  tr.orbit_radius_m = field<double>(t, "orbit_radius_m", tr.orbit_radius_m);
  tr.zigzag_angle_deg =
      field<double>(t, "zigzag_angle_deg", tr.zigzag_angle_deg);
  tr.zigzag_period = field<int>(t, "zigzag_period", tr.zigzag_period);
  tr.ramp_speed = field<bool>(t, "ramp_speed", tr.ramp_speed);
  tr.frame_dt_s = field<double>(t, "frame_dt_s", tr.frame_dt_s);
  if (tr.n_frames < 13) {
    throw Error(ErrorCode::ConfigError,
                "field 'trajectory.n_frames': must be >= 13");
  }
  if (tr.length_m <= 0) {
    throw Error(ErrorCode::ConfigError,
                "field 'trajectory.length_m': must be > 0");
  }

  cfg.pipeline.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

Sequence build_sequence(const ExperimentConfig& config) {
  const SequenceConfig& sq = config.sequence;
  if (!sq.generate) return load_sequence(sq.path);

  CameraIntrinsics K;
  K.width = sq.width;
  K.height = sq.height;
  K.fx = sq.fx;
  K.fy = sq.fy;
  K.cx = sq.cx;
  K.cy = sq.cy;
  const Scene scene = make_scene(sq.scene, sq.scene_seed, sq.constant_texture);
  return generate_sequence(scene, sq.trajectory, K, sq.downsample);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const Sequence seq = build_sequence(config);

  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.pipeline = run_sequence(config.pipeline, seq);
  result.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  for (int f = 0; f < seq.n_frames(); ++f) {
    result.estimate.push(result.pipeline.timestamps[f],
                         result.pipeline.poses[f]);
    result.ground_truth.push(seq.timestamps[f], seq.poses[f]);
  }
  result.metrics = evaluate_trajectories(result.estimate, result.ground_truth);

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    write_trajectory_tum(config.output_dir + "/trajectory.txt",
                         result.estimate);
    if (config.export_gt) {
      write_trajectory_tum(config.output_dir + "/gt.txt", result.ground_truth);
    }
    write_metrics_report(config.output_dir + "/metrics.txt", config.name,
                         result);
    write_diagnostics_csv(config.output_dir + "/diagnostics.csv",
                          result.pipeline);
    write_errors_csv(config.output_dir + "/errors.csv", result.metrics);
    if (config.export_pointcloud) {
      export_pointcloud(result.pipeline.graph,
                        config.output_dir + "/pointcloud.ply");
    }
  }
  return result;
}

void write_metrics_report(const std::string& path, const std::string& name,
                          const ExperimentResult& result) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  const MetricsReport& m = result.metrics;
  out << "# metrics report: " << name << " (RMSE aggregation)\n";
  char buf[128];
  auto kv = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s %.9g\n", key, v);
    out << buf;
  };
  kv("ate_m", m.ate_m);
  kv("rte_m", m.rte_m);
  kv("scale", m.scale);
  kv("max_rot_err_rad", m.max_rot_err_rad);
  kv("runtime_s", result.runtime_s);
  kv("n_frames", static_cast<double>(result.estimate.size()));
  kv("n_keyframes", static_cast<double>(result.pipeline.n_keyframes));
  kv("eta_init", result.pipeline.gate.eta_init);

  nlohmann::json j;
  j["ate_m"] = m.ate_m;
  j["rte_m"] = m.rte_m;
  j["scale"] = m.scale;
  j["max_rot_err_rad"] = m.max_rot_err_rad;
  j["runtime_s"] = result.runtime_s;
  j["n_frames"] = result.estimate.size();
  j["n_keyframes"] = result.pipeline.n_keyframes;
  j["eta_init"] = result.pipeline.gate.eta_init;
  out << "json " << j.dump() << "\n";
}

void write_diagnostics_csv(const std::string& path,
                           const PipelineResult& result) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  size_t max_rf = 0;
  for (const FrameDiagnostics& d : result.diagnostics) {
    max_rf = std::max(max_rf, d.residual_flow.size());
  }
  out << "frame,timestamp,is_keyframe,eta_prime,gate_C,mvs_checked,"
         "mvs_applied,flow_updates,ba_iterations";
  for (size_t k = 0; k < max_rf; ++k) out << ",residual_flow_" << k;
  out << "\n";
  for (const FrameDiagnostics& d : result.diagnostics) {
    out << d.frame_id << "," << d.timestamp << "," << (d.is_keyframe ? 1 : 0)
        << ",";
    if (std::isfinite(d.eta_prime)) out << d.eta_prime;
    out << "," << d.gate_C << "," << (d.mvs_checked ? 1 : 0) << ","
        << (d.mvs_applied ? 1 : 0) << "," << d.flow_updates << ","
        << d.ba_iterations;
    for (size_t k = 0; k < max_rf; ++k) {
      out << ",";
      if (k < d.residual_flow.size()) out << d.residual_flow[k];
    }
    out << "\n";
  }
}

void write_errors_csv(const std::string& path, const MetricsReport& metrics) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out << "timestamp,ate_err_m,rte_err_m\n";
  for (size_t k = 0; k < metrics.frame_timestamps.size(); ++k) {
    out << metrics.frame_timestamps[k] << "," << metrics.ate_series[k] << ","
        << metrics.rte_series[k] << "\n";
  }
}

}  // namespace dgvo
