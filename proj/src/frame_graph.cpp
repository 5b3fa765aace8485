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

#include "frame_graph.hpp"

#include <algorithm>
#include <map>

namespace dgvo {

const Keyframe* FrameGraph::find(int id) const {
  for (const Keyframe& kf : keyframes) {
    if (kf.id == id) return &kf;
  }
  return nullptr;
}

Keyframe* FrameGraph::find(int id) {
  for (Keyframe& kf : keyframes) {
    if (kf.id == id) return &kf;
  }
  return nullptr;
}

int FrameGraph::window_index(int id) const {
  for (size_t i = 0; i < keyframes.size(); ++i) {
    if (keyframes[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

bool admit_frame(double mean_flow_magnitude_px, double threshold_px) {
  return mean_flow_magnitude_px > threshold_px;
}

std::vector<EdgePair> build_edges_over(const std::vector<int>& ids,
                                       int radius) {
  std::vector<EdgePair> pairs;
  const int n = static_cast<int>(ids.size());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b <= std::min(a + radius, n - 1); ++b) {
      pairs.push_back({ids[a], ids[b]});
      pairs.push_back({ids[b], ids[a]});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const EdgePair& x, const EdgePair& y) {
    return x.src != y.src ? x.src < y.src : x.dst < y.dst;
  });
  return pairs;
}

std::vector<EdgePair> build_edges(const FrameGraph& graph, int radius) {
  std::vector<int> ids;
  ids.reserve(graph.keyframes.size());
  for (const Keyframe& kf : graph.keyframes) ids.push_back(kf.id);
  return build_edges_over(ids, radius);
}

void apply_edge_pairs(FrameGraph& graph, const std::vector<EdgePair>& pairs) {
  std::map<std::pair<int, int>, FlowObservation> kept;
  for (Edge& e : graph.edges) {
    kept.emplace(std::make_pair(e.src, e.dst), std::move(e.flow));
  }
  graph.edges.clear();
  graph.edges.reserve(pairs.size());
  for (const EdgePair& p : pairs) {
    Edge e;
    e.src = p.src;
    e.dst = p.dst;
    auto it = kept.find({p.src, p.dst});
    if (it != kept.end()) e.flow = std::move(it->second);
    graph.edges.push_back(std::move(e));
  }
}

void slide_window(FrameGraph& graph) {
  while (static_cast<int>(graph.keyframes.size()) > graph.window_size) {
    const int victim = graph.keyframes.front().id;
    graph.archive.push_back(ArchivedKeyframe{std::move(graph.keyframes.front())});
    graph.keyframes.erase(graph.keyframes.begin());
    graph.edges.erase(std::remove_if(graph.edges.begin(), graph.edges.end(),
                                     [victim](const Edge& e) {
                                       return e.src == victim ||
                                              e.dst == victim;
                                     }),
                      graph.edges.end());
  }
}

}  // namespace dgvo
