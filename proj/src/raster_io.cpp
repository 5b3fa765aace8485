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

#include "raster_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "common.hpp"

namespace dgvo {

namespace {

void write_floats(std::ofstream& out, const std::string& tag, int width,
                  int height, const std::vector<float>& values) {
  out << tag << " v1 " << width << " " << height << "\n";
  static_assert(sizeof(float) == 4);
  // Host is little-endian on every supported target; write raw.
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::IoError, "short write");
}

struct MapHeader {
  int width = 0;
  int height = 0;
  size_t payload_offset = 0;
};

MapHeader read_header(std::ifstream& in, const std::string& path,
                      const std::string& tag) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::FormatError, path + ": empty file (byte offset 0)");
  }
  std::istringstream hs(line);
  std::string file_tag, version;
  MapHeader h;
  if (!(hs >> file_tag >> version >> h.width >> h.height) || file_tag != tag ||
      version != "v1" || h.width <= 0 || h.height <= 0) {
    throw Error(ErrorCode::FormatError,
                path + ": bad header '" + line + "' (byte offset 0)");
  }
  h.payload_offset = line.size() + 1;
  return h;
}

std::vector<float> read_floats(std::ifstream& in, const std::string& path,
                               const MapHeader& h, size_t count) {
  std::vector<float> values(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<size_t>(in.gcount()) != count * sizeof(float)) {
    const size_t offset = h.payload_offset + static_cast<size_t>(in.gcount());
    throw Error(ErrorCode::FormatError,
                path + ": truncated payload (byte offset " +
                    std::to_string(offset) + ")");
  }
  // Trailing bytes mean the header lied about the size.
  char extra;
  if (in.read(&extra, 1)) {
    const size_t offset = h.payload_offset + count * sizeof(float);
    throw Error(ErrorCode::FormatError,
                path + ": trailing bytes (byte offset " +
                    std::to_string(offset) + ")");
  }
  return values;
}

}  // namespace

void write_depth_file(const std::string& path, const Grid& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<float> values(depth.data.begin(), depth.data.end());
  write_floats(out, "RDEPTH", depth.width, depth.height, values);
}

Grid read_depth_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  const MapHeader h = read_header(in, path, "RDEPTH");
  const std::vector<float> values =
      read_floats(in, path, h, static_cast<size_t>(h.width) * h.height);
  Grid g(h.width, h.height);
  for (size_t i = 0; i < values.size(); ++i) g.data[i] = values[i];
  return g;
}

void write_image_file(const std::string& path, const ColorImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<float> values(image.rgb.begin(), image.rgb.end());
  write_floats(out, "RIMG", image.width, image.height, values);
}

ColorImage read_image_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  const MapHeader h = read_header(in, path, "RIMG");
  const std::vector<float> values =
      read_floats(in, path, h, static_cast<size_t>(3) * h.width * h.height);
  ColorImage img(h.width, h.height);
  for (size_t i = 0; i < values.size(); ++i) img.rgb[i] = values[i];
  return img;
}

}  // namespace dgvo
