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

#ifndef DGVO_RASTER_IO_HPP
#define DGVO_RASTER_IO_HPP

#include <string>

#include "raster.hpp"

namespace dgvo {

// Binary map formats share one scheme: an ASCII header line
//   <TAG> v1 <width> <height>\n
// followed by row-major little-endian 32-bit floats (1 per pixel for RDEPTH,
// 3 interleaved RGB per pixel for RIMG).

void write_depth_file(const std::string& path, const Grid& depth);

/// Reads an RDEPTH file. Throws FormatError (with the byte offset of the
/// problem) on malformed input and never returns a partial map.
Grid read_depth_file(const std::string& path);

void write_image_file(const std::string& path, const ColorImage& image);
ColorImage read_image_file(const std::string& path);

}  // namespace dgvo

#endif  // DGVO_RASTER_IO_HPP
