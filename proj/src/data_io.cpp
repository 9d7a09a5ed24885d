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

#include "grlgq/data_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "grlgq/errors.hpp"
#include "grlgq/pgm.hpp"

namespace grlgq::io {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint32_t big_endian_u32(const std::string& bytes, std::size_t offset, const fs::path& path) {
  if (bytes.size() < offset + 4) throw Error(ErrorCode::TruncatedFile, "IDX header is short: " + path.string());
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

void require_magic(std::uint32_t got, std::uint32_t want, const fs::path& path) {
  if (got != want) {
    std::ostringstream msg;
    msg << "IDX magic 0x" << std::hex << got << " (expected 0x" << want << "): " << path.string();
    throw Error(ErrorCode::BadMagic, msg.str());
  }
}

}  // namespace

int RawImageDataset::classes() const {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
}

void normalize_columns(Eigen::MatrixXd& x) {
  for (Index j = 0; j < x.cols(); ++j) {
    const double n = x.col(j).norm();
    if (!(n > 0)) throw Error(ErrorCode::EmptySet, "blank image (zero norm) at column " + std::to_string(j));
    x.col(j) /= n;
  }
}

void check_data_matrix(const Eigen::MatrixXd& x, double tolerance) {
  if (x.rows() < 1 || x.cols() < 1) throw Error(ErrorCode::EmptySet, "empty data matrix");
  if (!x.allFinite()) throw Error(ErrorCode::NonFinite, "data matrix has non-finite entries");
  for (Index j = 0; j < x.cols(); ++j) {
    if (std::abs(x.col(j).norm() - 1.0) > tolerance) {
      throw Error(ErrorCode::InconsistentDims, "column " + std::to_string(j) + " is not unit norm");
    }
  }
}

IdxImages read_idx_images(const fs::path& path) {
  const std::string bytes = read_file(path);
  require_magic(big_endian_u32(bytes, 0, path), kIdxImageMagic, path);
  const std::uint32_t count = big_endian_u32(bytes, 4, path);
  const std::uint32_t rows = big_endian_u32(bytes, 8, path);
  const std::uint32_t cols = big_endian_u32(bytes, 12, path);
  const std::size_t dim = std::size_t(rows) * cols;
  if (bytes.size() - 16 < std::size_t(count) * dim) {
    throw Error(ErrorCode::TruncatedFile, "IDX image data is short: " + path.string());
  }
  IdxImages out;
  out.rows = int(rows);
  out.cols = int(cols);
  out.images.resize(Index(dim), Index(count));
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + 16);
  for (std::size_t n = 0; n < count; ++n)
    for (std::size_t i = 0; i < dim; ++i) out.images(Index(i), Index(n)) = raster[n * dim + i] / 255.0;
  normalize_columns(out.images);
  return out;
}

std::vector<int> read_idx_labels(const fs::path& path) {
  const std::string bytes = read_file(path);
  require_magic(big_endian_u32(bytes, 0, path), kIdxLabelMagic, path);
  const std::uint32_t count = big_endian_u32(bytes, 4, path);
  if (bytes.size() - 8 < count) throw Error(ErrorCode::TruncatedFile, "IDX label data is short: " + path.string());
  std::vector<int> labels(count);
  for (std::size_t n = 0; n < count; ++n) labels[n] = static_cast<unsigned char>(bytes[8 + n]);
  return labels;
}

RawImageDataset read_mnist(const fs::path& images, const fs::path& labels) {
  auto img = read_idx_images(images);
  auto lab = read_idx_labels(labels);
  if (Index(lab.size()) != img.images.cols()) {
    throw Error(ErrorCode::CountMismatch, std::to_string(img.images.cols()) + " images but " +
                                              std::to_string(lab.size()) + " labels");
  }
  RawImageDataset raw;
  raw.images = std::move(img.images);
  raw.width = img.cols;
  raw.height = img.rows;
  raw.labels.reserve(lab.size());
  for (int l : lab) raw.labels.push_back(l + 1);
  return raw;
}

namespace {

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    if (directories ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::string, int> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + path.string());
  std::map<std::string, int> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string name;
    int label = 0;
    if (!(ls >> name)) continue;
    if (!(ls >> label) || label < 1) {
      throw Error(ErrorCode::Config, "manifest line " + std::to_string(lineno) + " needs '<class-dir> <label>'");
    }
    out[name] = label;
  }
  return out;
}

}  // namespace

ImageSetCollection read_imageset_dirs(const fs::path& root, const std::optional<fs::path>& manifest) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::Io, "not a directory: " + root.string());
  std::map<std::string, int> overrides;
  if (manifest) overrides = read_manifest(*manifest);

  ImageSetCollection out;
  const auto classes = sorted_entries(root, true);
  if (classes.empty()) throw Error(ErrorCode::EmptySet, "no class directories under " + root.string());
  int next_label = 1;
  for (const auto& class_dir : classes) {
    const std::string name = class_dir.filename().string();
    int label = next_label++;
    if (manifest) {
      auto it = overrides.find(name);
      if (it == overrides.end()) throw Error(ErrorCode::Config, "class '" + name + "' missing from manifest");
      label = it->second;
    }
    if (int(out.class_names.size()) < label) out.class_names.resize(std::size_t(label));
    out.class_names[std::size_t(label - 1)] = name;

    for (const auto& set_dir : sorted_entries(class_dir, true)) {
      const auto frames = sorted_entries(set_dir, false);
      const std::string id = name + "/" + set_dir.filename().string();
      if (frames.empty()) throw Error(ErrorCode::EmptySet, "no frames in " + id);
      LabeledSet set;
      set.label = label;
      set.id = id;
      for (std::size_t f = 0; f < frames.size(); ++f) {
        if (frames[f].extension() != ".pgm") {
          throw Error(ErrorCode::UnsupportedFormat, "not a .pgm frame: " + frames[f].string());
        }
        const PgmImage img = read_pgm(frames[f]);
        if (out.width == 0) {
          out.width = img.width;
          out.height = img.height;
        } else if (img.width != out.width || img.height != out.height) {
          throw Error(ErrorCode::InconsistentDims,
                      frames[f].string() + " is " + std::to_string(img.width) + "x" +
                          std::to_string(img.height) + ", expected " + std::to_string(out.width) + "x" +
                          std::to_string(out.height));
        }
        if (f == 0) set.frames.resize(Index(img.pixels.size()), Index(frames.size()));
        for (std::size_t i = 0; i < img.pixels.size(); ++i) set.frames(Index(i), Index(f)) = img.pixels[i] / 255.0;
      }
      normalize_columns(set.frames);
      out.sets.push_back(std::move(set));
    }
  }
  if (out.sets.empty()) throw Error(ErrorCode::EmptySet, "no image sets under " + root.string());
  return out;
}

std::vector<LabeledSubspace<double>> SubspaceDataset::labeled() const {
  std::vector<LabeledSubspace<double>> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back({it.factors.subspace, it.label});
  return out;
}

SubspaceDataset build_classwise_subspace_dataset(const RawImageDataset& raw, Index d, Index m,
                                                 int sets_per_class, std::uint64_t seed) {
  if (m < d) throw Error(ErrorCode::Config, "need m >= d");
  if (sets_per_class < 1) throw Error(ErrorCode::Config, "need at least one set per class");
  if (Index(raw.labels.size()) != raw.images.cols()) {
    throw Error(ErrorCode::CountMismatch, "image and label counts differ");
  }
  std::map<int, std::vector<Index>> by_class;
  for (Index i = 0; i < Index(raw.labels.size()); ++i) by_class[raw.labels[std::size_t(i)]].push_back(i);

  std::mt19937_64 rng(seed);
  SubspaceDataset out;
  out.ambient_dim = raw.images.rows();
  out.subspace_dim = d;
  for (auto& [label, members] : by_class) {
    if (Index(members.size()) < m) {
      throw Error(ErrorCode::InsufficientImages, "class " + std::to_string(label) + " has " +
                                                     std::to_string(members.size()) + " images, need " +
                                                     std::to_string(m));
    }
    for (int s = 0; s < sets_per_class; ++s) {
      // partial Fisher-Yates: the first m entries become the draw
      for (Index k = 0; k < m; ++k) {
        std::uniform_int_distribution<Index> pick(k, Index(members.size()) - 1);
        std::swap(members[std::size_t(k)], members[std::size_t(pick(rng))]);
      }
      Eigen::MatrixXd x(raw.images.rows(), m);
      for (Index k = 0; k < m; ++k) x.col(k) = raw.images.col(members[std::size_t(k)]);
      out.items.push_back({subspace_from_set(x, d), label,
                           "class" + std::to_string(label) + "/draw" + std::to_string(s)});
    }
  }
  return out;
}

SubspaceDataset build_per_set_subspace_dataset(const std::vector<LabeledSet>& sets, Index d) {
  if (sets.empty()) throw Error(ErrorCode::EmptySet, "no image sets");
  SubspaceDataset out;
  out.ambient_dim = sets.front().frames.rows();
  out.subspace_dim = d;
  for (const auto& s : sets) {
    if (s.frames.rows() != out.ambient_dim) {
      throw Error(ErrorCode::InconsistentDims, "set " + s.id + " has a different image size");
    }
    try {
      out.items.push_back({subspace_from_set(s.frames, d), s.label, s.id});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficient) throw;
      throw Error(ErrorCode::RankDeficient, "set " + s.id + ": " + e.what());
    }
  }
  return out;
}

}  // namespace grlgq::io
