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

#include <set>

#include "frame_graph.hpp"

using namespace dgvo;

namespace {

Keyframe stub_keyframe(int id) {
  Keyframe kf;
  kf.id = id;
  kf.timestamp = 0.1 * id;
  kf.inv_depth = Grid(4, 4, 0.5);
  kf.pixel_mask = BoolGrid(4, 4, true);
  return kf;
}

FrameGraph graph_with(int n, int window_size = 12) {
  FrameGraph g;
  g.window_size = window_size;
  for (int i = 0; i < n; ++i) g.keyframes.push_back(stub_keyframe(i));
  g.total_admitted = n;
  return g;
}

// brute-force pair enumeration oracle
int expected_edge_count(int n, int radius) {
  int count = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != b && std::abs(a - b) <= radius) ++count;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("admit_frame thresholding is strict") {
  CHECK(!admit_frame(0.0, 2.4));
  CHECK(admit_frame(10.0, 2.4));
  CHECK(!admit_frame(2.4, 2.4));
  CHECK(admit_frame(2.4000001, 2.4));
}

TEST_CASE("build_edges on a single keyframe is empty") {
  FrameGraph g = graph_with(1);
  CHECK(build_edges(g, 3).empty());
}

TEST_CASE("build_edges produces bidirectional neighbor pairs") {
  FrameGraph g = graph_with(3);
  const std::vector<EdgePair> pairs = build_edges(g, 2);
  CHECK(pairs.size() == 6);
  std::set<std::pair<int, int>> seen;
  for (const EdgePair& p : pairs) {
    CHECK(p.src != p.dst);
    CHECK(seen.insert({p.src, p.dst}).second);  // no duplicates
  }
  CHECK(seen.count({0, 1}) == 1);
  CHECK(seen.count({1, 0}) == 1);
  CHECK(seen.count({0, 2}) == 1);
  CHECK(seen.count({2, 1}) == 1);
}

TEST_CASE("build_edges matches the pair enumeration oracle") {
  for (int n : {2, 5, 12}) {
    for (int radius : {1, 3, 6}) {
      FrameGraph g = graph_with(n);
      CHECK(static_cast<int>(build_edges(g, radius).size()) ==
            expected_edge_count(n, radius));
    }
  }
}

TEST_CASE("slide_window is a no-op at capacity") {
  FrameGraph g = graph_with(12);
  apply_edge_pairs(g, build_edges(g, 3));
  const size_t edges_before = g.edges.size();
  slide_window(g);
  CHECK(g.keyframes.size() == 12);
  CHECK(g.edges.size() == edges_before);
  CHECK(g.archive.empty());
}

TEST_CASE("slide_window removes the oldest keyframe and its edges") {
  FrameGraph g = graph_with(13);
  apply_edge_pairs(g, build_edges(g, 3));
  slide_window(g);
  CHECK(g.keyframes.size() == 12);
  CHECK(g.keyframes.front().id == 1);
  REQUIRE(g.archive.size() == 1);
  CHECK(g.archive[0].keyframe.id == 0);
  for (const Edge& e : g.edges) {
    CHECK(e.src != 0);
    CHECK(e.dst != 0);
  }
}

TEST_CASE("repeated sliding archives every displaced keyframe once") {
  FrameGraph g;
  g.window_size = 12;
  for (int i = 0; i < 50; ++i) {
    g.keyframes.push_back(stub_keyframe(i));
    ++g.total_admitted;
    slide_window(g);
    apply_edge_pairs(g, build_edges(g, 3));
  }
  CHECK(g.keyframes.size() == 12);
  CHECK(g.archive.size() == 50 - 12);

  // every admitted keyframe appears exactly once across window + archive
  std::set<int> ids;
  for (const Keyframe& kf : g.keyframes) CHECK(ids.insert(kf.id).second);
  for (const ArchivedKeyframe& a : g.archive) {
    CHECK(ids.insert(a.keyframe.id).second);
  }
  CHECK(ids.size() == 50);

  // archive order matches admission order
  for (size_t i = 1; i < g.archive.size(); ++i) {
    CHECK(g.archive[i].keyframe.id > g.archive[i - 1].keyframe.id);
  }
}

TEST_CASE("edges always reference live keyframes") {
  FrameGraph g;
  g.window_size = 5;
  for (int i = 0; i < 23; ++i) {
    g.keyframes.push_back(stub_keyframe(i));
    slide_window(g);
    apply_edge_pairs(g, build_edges(g, 2));
    for (const Edge& e : g.edges) {
      CHECK(g.find(e.src) != nullptr);
      CHECK(g.find(e.dst) != nullptr);
    }
  }
}

TEST_CASE("apply_edge_pairs keeps observations of surviving pairs") {
  FrameGraph g = graph_with(4);
  apply_edge_pairs(g, build_edges(g, 1));
  // attach a marker observation to edge (1, 2)
  for (Edge& e : g.edges) {
    if (e.src == 1 && e.dst == 2) {
      e.flow.target.assign(1, Eigen::Vector2d(7, 7));
      e.flow.confidence = Grid(1, 1, 0.5);
      e.flow.valid = BoolGrid(1, 1, true);
    }
  }
  apply_edge_pairs(g, build_edges(g, 2));  // widen: pair (1,2) survives
  bool found = false;
  for (const Edge& e : g.edges) {
    if (e.src == 1 && e.dst == 2) {
      found = true;
      REQUIRE(!e.flow.empty());
      CHECK(e.flow.target[0] == Eigen::Vector2d(7, 7));
    }
  }
  CHECK(found);
}
