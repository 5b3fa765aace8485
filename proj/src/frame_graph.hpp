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

#ifndef DGVO_FRAME_GRAPH_HPP
#define DGVO_FRAME_GRAPH_HPP

#include <optional>
#include <vector>

#include "geometry.hpp"
#include "priors.hpp"

namespace dgvo {

struct Keyframe {
  int id = -1;            // global frame index, strictly increasing
  double timestamp = 0.0;
  ColorImage image;
  CameraIntrinsics intrinsics;
  Pose pose;              // world_from_camera, current estimate
  Grid inv_depth;         // 1/m at optimization resolution, state variable
  BoolGrid pixel_mask;    // false = frozen, excluded from flow and BA
  DepthPrior mono_prior;
  std::optional<DepthPrior> mvs_prior;
  int gate_C = 0;         // condition weight: 1 enables depth regularization

  /// Regularization target: the MVS prior once injected, else monocular.
  const DepthPrior& active_prior() const {
    return mvs_prior ? *mvs_prior : mono_prior;
  }
  bool has_prior() const { return mvs_prior.has_value() || has_mono_prior; }

  bool has_mono_prior = false;
};

struct Edge {
  int src = -1;  // keyframe id i (whose depth is reprojected)
  int dst = -1;  // keyframe id j
  FlowObservation flow;
};

/// Pose record of a keyframe that left the window; full state is retained so
/// global refinement and point-cloud export can revisit it.
struct ArchivedKeyframe {
  Keyframe keyframe;
};

struct FrameGraph {
  std::vector<Keyframe> keyframes;  // ordered by admission
  std::vector<Edge> edges;
  int window_size = 12;
  int warmup_size = 12;
  bool initialized = false;  // true once warmup_size keyframes were admitted
  int total_admitted = 0;
  std::vector<ArchivedKeyframe> archive;  // slid-out keyframes, oldest first

  const Keyframe* find(int id) const;
  Keyframe* find(int id);
  int window_index(int id) const;  // -1 if not in window
};

/// Keyframe decision: strictly greater than the flow threshold.
bool admit_frame(double mean_flow_magnitude_px, double threshold_px);

struct EdgePair {
  int src, dst;
};

/// Bidirectional edges between each keyframe and its `radius` temporal
/// neighbors within the window, no duplicates, ordered by (src, dst).
std::vector<EdgePair> build_edges(const FrameGraph& graph, int radius);

/// Same policy over an explicit keyframe id list (used for global refinement).
std::vector<EdgePair> build_edges_over(const std::vector<int>& ids, int radius);

/// Replaces graph.edges with the given pairs, keeping existing flow
/// observations for pairs that survive.
void apply_edge_pairs(FrameGraph& graph, const std::vector<EdgePair>& pairs);

/// Removes oldest keyframes (and their edges) until the window fits; removed
/// keyframes are archived with their final state.
void slide_window(FrameGraph& graph);

}  // namespace dgvo

#endif  // DGVO_FRAME_GRAPH_HPP
