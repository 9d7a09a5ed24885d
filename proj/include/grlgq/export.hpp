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

#include <filesystem>
#include <span>

#include "grlgq/data_io.hpp"
#include "grlgq/grassmann.hpp"
#include "grlgq/lvq.hpp"

namespace grlgq::io {

/// `index,lambda` header followed by one row per principal angle.
void export_relevance_csv(const ModelState<double>& model, const std::filesystem::path& path);

/// Writes every basis column of prototype `index` as an 8-bit PGM
/// (proto<index>_vec<j>.pgm), linearly stretched from [min, max] to
/// [0, 255]. The stretch per image is recorded in proto<index>_scaling.txt.
void export_prototype_images(const ModelState<double>& model, Index index, int width, int height,
                             const std::filesystem::path& dir);

/// Writes the per-pixel terms of cos θᵢ as a PGM mapped symmetrically
/// around 0 (0 → 128, ±max|v| → 255 / 0) and the raw values as
/// <path stem>.csv next to it.
void export_pixel_influence(const PrincipalDecomposition<double>& pd, Index i, int width,
                            int height, const std::filesystem::path& path);

/// Symmetric (N+p)×(N+p) matrix of adaptive squared distances between all
/// samples followed by all prototypes. A `<path>.labels.csv` sidecar lists
/// `index,kind,label` for every row.
Eigen::MatrixXd distance_matrix(const ModelState<double>& model,
                                std::span<const LabeledSubspace<double>> data);
void export_distance_matrix_csv(const ModelState<double>& model,
                                std::span<const LabeledSubspace<double>> data,
                                const std::filesystem::path& path);

/// Plain numeric CSV, full round-trip precision.
void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// Confusion matrix with a `true\predicted` header row and column.
void write_confusion_csv(const Eigen::MatrixXi& confusion, const std::filesystem::path& path);

}  // namespace grlgq::io
