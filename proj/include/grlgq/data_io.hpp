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

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "grlgq/grassmann.hpp"
#include "grlgq/lvq.hpp"

namespace grlgq::io {

/// Unit-norm images as columns of a D×n matrix with labels 1..C.
struct RawImageDataset {
  Eigen::MatrixXd images;
  std::vector<int> labels;
  int width = 0;
  int height = 0;

  int classes() const;
};

struct IdxImages {
  Eigen::MatrixXd images;  // D×n, D = rows·cols, row-major pixel order
  int rows = 0;
  int cols = 0;
};

/// IDX image file (magic 0x00000803). Pixels are scaled to [0,1] and every
/// image is L2-normalized.
IdxImages read_idx_images(const std::filesystem::path& path);

/// IDX label file (magic 0x00000801). Returns the raw byte values.
std::vector<int> read_idx_labels(const std::filesystem::path& path);

/// Pairs an image and a label file. Labels are shifted by one so that the
/// digit 0 becomes class 1.
RawImageDataset read_mnist(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Scales every column to unit Euclidean norm. Throws EmptySet on an
/// all-zero column.
void normalize_columns(Eigen::MatrixXd& x);

/// Asserts the DataMatrix invariants: finite entries, unit-norm columns.
void check_data_matrix(const Eigen::MatrixXd& x, double tolerance = 1e-10);

/// One image set: frames as unit-norm columns.
struct LabeledSet {
  Eigen::MatrixXd frames;
  int label = 0;
  std::string id;
};

struct ImageSetCollection {
  std::vector<LabeledSet> sets;
  std::vector<std::string> class_names;  // index c-1 holds the name of class c
  int width = 0;
  int height = 0;
};

/// Reads root/<class>/<set>/<frame>.pgm. Classes are numbered 1.. in sorted
/// directory-name order unless `manifest` maps names to labels, one
/// "<class-dir> <label>" pair per line.
ImageSetCollection read_imageset_dirs(const std::filesystem::path& root,
                                      const std::optional<std::filesystem::path>& manifest = {});

struct SubspaceItem {
  SubspaceWithFactors<double> factors;
  int label = 0;
  std::string id;
};

struct SubspaceDataset {
  std::vector<SubspaceItem> items;
  Index ambient_dim = 0;
  Index subspace_dim = 0;

  std::vector<LabeledSubspace<double>> labeled() const;
};

/// For every class, `sets_per_class` independent draws of m images (without
/// replacement inside a draw), each turned into a d-dimensional subspace.
SubspaceDataset build_classwise_subspace_dataset(const RawImageDataset& raw, Index d, Index m,
                                                 int sets_per_class, std::uint64_t seed);

/// One subspace per image set. A rank-deficient set raises RankDeficient
/// naming the set.
SubspaceDataset build_per_set_subspace_dataset(const std::vector<LabeledSet>& sets, Index d);

}  // namespace grlgq::io
