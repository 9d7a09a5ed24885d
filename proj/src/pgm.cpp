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

#include "grlgq/pgm.hpp"

#include <cctype>
#include <fstream>
#include <string>

#include "grlgq/errors.hpp"

namespace grlgq::io {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(char(c));
  }
  return tok;
}

int header_int(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = header_token(in);
  if (tok.empty()) throw Error(ErrorCode::TruncatedFile, "PGM header ends early: " + path.string());
  int v = 0;
  for (char ch : tok) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) {
      throw Error(ErrorCode::UnsupportedFormat, "bad PGM header field '" + tok + "': " + path.string());
    }
    v = v * 10 + (ch - '0');
    if (v > (1 << 24)) throw Error(ErrorCode::UnsupportedFormat, "PGM header value too large");
  }
  return v;
}

}  // namespace

PgmImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  if (header_token(in) != "P5") {
    throw Error(ErrorCode::UnsupportedFormat, "not a binary PGM (P5): " + path.string());
  }
  PgmImage img;
  img.width = header_int(in, path);
  img.height = header_int(in, path);
  const int maxval = header_int(in, path);
  if (img.width < 1 || img.height < 1) {
    throw Error(ErrorCode::UnsupportedFormat, "empty PGM raster: " + path.string());
  }
  if (maxval < 1 || maxval > 255) {
    throw Error(ErrorCode::UnsupportedFormat, "only 8-bit PGM is supported: " + path.string());
  }
  // header_token consumed the single whitespace byte after maxval
  img.pixels.resize(std::size_t(img.width) * std::size_t(img.height));
  in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
  if (in.gcount() != std::streamsize(img.pixels.size())) {
    throw Error(ErrorCode::TruncatedFile, "PGM raster is short: " + path.string());
  }
  if (maxval != 255) {
    for (auto& p : img.pixels) p = std::uint8_t((int(p) * 255 + maxval / 2) / maxval);
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const PgmImage& image) {
  if (image.pixels.size() != std::size_t(image.width) * std::size_t(image.height)) {
    throw Error(ErrorCode::InconsistentDims, "PGM raster size does not match width*height");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), std::streamsize(image.pixels.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace grlgq::io
