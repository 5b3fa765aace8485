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

#ifndef DGVO_RASTER_HPP
#define DGVO_RASTER_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <vector>

namespace dgvo {

/// Row-major scalar map (depth, confidence, inverse depth, ...).
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Grid() = default;
  Grid(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  int size() const { return width * height; }
  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const {
    return data[static_cast<size_t>(y) * width + x];
  }
  double& operator[](int i) { return data[i]; }
  double operator[](int i) const { return data[i]; }
  bool same_shape(const Grid& o) const {
    return width == o.width && height == o.height;
  }
};

struct BoolGrid {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  BoolGrid() = default;
  BoolGrid(int w, int h, bool fill = false)
      : width(w), height(h),
        data(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

  int size() const { return width * height; }
  bool at(int x, int y) const {
    return data[static_cast<size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool v) {
    data[static_cast<size_t>(y) * width + x] = v ? 1 : 0;
  }
  bool operator[](int i) const { return data[i] != 0; }
  void set(int i, bool v) { data[i] = v ? 1 : 0; }
  int count() const {
    return static_cast<int>(std::count(data.begin(), data.end(), uint8_t(1)));
  }
};

/// Interleaved RGB image, values in [0, 1].
struct ColorImage {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;  // 3 * width * height, row-major, RGB interleaved

  ColorImage() = default;
  ColorImage(int w, int h)
      : width(w), height(h), rgb(static_cast<size_t>(3) * w * h, 0.0) {}

  Eigen::Vector3d at(int x, int y) const {
    size_t i = 3 * (static_cast<size_t>(y) * width + x);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
  void set(int x, int y, const Eigen::Vector3d& c) {
    size_t i = 3 * (static_cast<size_t>(y) * width + x);
    rgb[i] = c.x();
    rgb[i + 1] = c.y();
    rgb[i + 2] = c.z();
  }
};

inline bool inside_image(double x, double y, int width, int height) {
  return x >= 0.0 && y >= 0.0 && x <= width - 1.0 && y <= height - 1.0;
}

/// Bilinear sample; caller guarantees (x, y) inside [0, w-1] x [0, h-1].
inline double bilinear(const Grid& g, double x, double y) {
  int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, g.width - 2);
  int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, g.height - 2);
  if (g.width == 1) x0 = 0;
  if (g.height == 1) y0 = 0;
  double fx = x - x0;
  double fy = y - y0;
  int x1 = std::min(x0 + 1, g.width - 1);
  int y1 = std::min(y0 + 1, g.height - 1);
  double v00 = g.at(x0, y0), v10 = g.at(x1, y0);
  double v01 = g.at(x0, y1), v11 = g.at(x1, y1);
  return (1 - fy) * ((1 - fx) * v00 + fx * v10) +
         fy * ((1 - fx) * v01 + fx * v11);
}

inline Eigen::Vector3d bilinear(const ColorImage& img, double x, double y) {
  int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, img.width - 2);
  int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, img.height - 2);
  if (img.width == 1) x0 = 0;
  if (img.height == 1) y0 = 0;
  double fx = x - x0;
  double fy = y - y0;
  int x1 = std::min(x0 + 1, img.width - 1);
  int y1 = std::min(y0 + 1, img.height - 1);
  Eigen::Vector3d v00 = img.at(x0, y0), v10 = img.at(x1, y0);
  Eigen::Vector3d v01 = img.at(x0, y1), v11 = img.at(x1, y1);
  return (1 - fy) * ((1 - fx) * v00 + fx * v10) +
         fy * ((1 - fx) * v01 + fx * v11);
}

/// Center of optimization-grid cell `k` in full-image pixel coordinates for
/// downsample factor `f` (f = 1 makes grid and image coincide).
inline double grid_center(int k, int f) { return (k + 0.5) * f - 0.5; }

}  // namespace dgvo

#endif  // DGVO_RASTER_HPP
