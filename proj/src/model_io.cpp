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

#include "grlgq/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "grlgq/errors.hpp"

namespace grlgq::io {

namespace {

constexpr std::string_view kMagic = "GRLGQ-MODEL v";

class Writer {
 public:
  template <typename T>
  void put(T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    U bits = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buf_.push_back(char(bits & 0xff));
      if constexpr (sizeof(U) > 1) bits >>= 8;
    }
  }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    if (bytes_.size() - pos_ < sizeof(U)) throw Error(ErrorCode::CorruptModel, "model payload is short");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      bits |= U(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::string_view payload) {
  return std::uint32_t(::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), uInt(payload.size())));
}

}  // namespace

std::string serialize_model(const ModelState<double>& model) {
  Writer w;
  w.put(std::uint8_t(model.mode));
  w.put(std::uint64_t(model.ambient_dim));
  w.put(std::uint64_t(model.subspace_dim));
  w.put(std::uint64_t(model.prototypes.size()));
  for (Index k = 0; k < model.relevance.size(); ++k) w.put(model.relevance(k));
  for (const auto& p : model.prototypes) {
    w.put(std::int64_t(p.label));
    const auto& b = p.subspace.basis();
    for (Index i = 0; i < b.rows(); ++i)
      for (Index j = 0; j < b.cols(); ++j) w.put(b(i, j));
  }
  const std::string payload = std::move(w.bytes());

  Writer frame;
  frame.put(std::uint64_t(payload.size()));
  std::string out = std::string(kMagic) + std::to_string(kModelFormatVersion) + "\n";
  out += frame.bytes();
  out += payload;
  Writer tail;
  tail.put(crc_of(payload));
  out += tail.bytes();
  return out;
}

ModelState<double> deserialize_model(const std::string& bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos || bytes.compare(0, kMagic.size(), kMagic) != 0) {
    throw Error(ErrorCode::CorruptModel, "missing model header");
  }
  int version = 0;
  try {
    version = std::stoi(bytes.substr(kMagic.size(), newline - kMagic.size()));
  } catch (const std::exception&) {
    throw Error(ErrorCode::CorruptModel, "unreadable model version");
  }
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "model format v" + std::to_string(version) +
                                                ", this build reads v" + std::to_string(kModelFormatVersion));
  }
  Reader frame(std::string_view(bytes).substr(newline + 1));
  const auto length = frame.get<std::uint64_t>();
  const std::size_t body = newline + 1 + 8;
  if (bytes.size() < body || bytes.size() - body != length + 4) {
    throw Error(ErrorCode::CorruptModel, "model length does not match file size");
  }
  const std::string_view payload = std::string_view(bytes).substr(body, length);
  if (Reader(std::string_view(bytes).substr(body + length)).get<std::uint32_t>() != crc_of(payload)) {
    throw Error(ErrorCode::CorruptModel, "model checksum mismatch");
  }

  Reader r(payload);
  const auto mode_byte = r.get<std::uint8_t>();
  if (mode_byte > 1) throw Error(ErrorCode::CorruptModel, "unknown mode");
  const auto ambient = Index(r.get<std::uint64_t>());
  const auto dim = Index(r.get<std::uint64_t>());
  const auto count = r.get<std::uint64_t>();
  if (dim < 1 || ambient < dim || count < 1 ||
      length != 1 + 24 + 8 * std::uint64_t(dim) + count * (8 + 8 * std::uint64_t(ambient * dim))) {
    throw Error(ErrorCode::CorruptModel, "inconsistent model dimensions");
  }
  ModelState<double> m;
  m.mode = Mode(mode_byte);
  m.ambient_dim = ambient;
  m.subspace_dim = dim;
  m.relevance.resize(dim);
  for (Index k = 0; k < dim; ++k) m.relevance(k) = r.get<double>();
  for (std::uint64_t p = 0; p < count; ++p) {
    const auto label = r.get<std::int64_t>();
    Matrix<double> b(ambient, dim);
    for (Index i = 0; i < ambient; ++i)
      for (Index j = 0; j < dim; ++j) b(i, j) = r.get<double>();
    try {
      m.prototypes.push_back({Subspace<double>(std::move(b)), int(label)});
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptModel, std::string("prototype ") + std::to_string(p) + ": " + e.what());
    }
  }
  return m;
}

void save_model(const ModelState<double>& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

ModelState<double> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ModelNotFound, "cannot open model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace grlgq::io
