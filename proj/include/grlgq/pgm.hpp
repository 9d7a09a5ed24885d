/*
 * Copyright 2026 The grlgq Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace grlgq::io {

/// 8-bit grayscale image, row-major.
struct PgmImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Reads a binary (P5) PGM with maxval <= 255. Throws UnsupportedFormat for
/// any other variant, TruncatedFile when the raster is short, Io when the
/// file cannot be opened.
PgmImage read_pgm(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const PgmImage& image);

}  // namespace grlgq::io
