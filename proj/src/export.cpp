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

#include "grlgq/export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "grlgq/errors.hpp"
#include "grlgq/pgm.hpp"

namespace grlgq::io {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void require_shape(Index dim, int width, int height) {
  if (Index(width) * Index(height) != dim || width < 1) {
    throw Error(ErrorCode::InconsistentDims, "width*height = " + std::to_string(width * height) +
                                                 " but D = " + std::to_string(dim));
  }
}

std::uint8_t to_byte(double v) {
  return std::uint8_t(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

void export_relevance_csv(const ModelState<double>& model, const fs::path& path) {
  auto out = open_out(path);
  out << "index,lambda\n";
  for (Index k = 0; k < model.relevance.size(); ++k) out << k + 1 << ',' << model.relevance(k) << '\n';
}

void export_prototype_images(const ModelState<double>& model, Index index, int width, int height,
                             const fs::path& dir) {
  if (index < 0 || index >= Index(model.prototypes.size())) {
    throw Error(ErrorCode::Config, "no prototype with index " + std::to_string(index));
  }
  const auto& basis = model.prototypes[std::size_t(index)].subspace.basis();
  require_shape(basis.rows(), width, height);
  fs::create_directories(dir);
  const std::string stem = "proto" + std::to_string(index);
  auto notes = open_out(dir / (stem + "_scaling.txt"));
  notes << "# pixel = round(255 * (value - min) / (max - min)); constant vectors map to 128\n"
        << "# file min max\n";
  for (Index j = 0; j < basis.cols(); ++j) {
    const auto col = basis.col(j);
    const double lo = col.minCoeff(), hi = col.maxCoeff();
    PgmImage img{width, height, std::vector<std::uint8_t>(std::size_t(col.size()))};
    for (Index i = 0; i < col.size(); ++i)
      img.pixels[std::size_t(i)] = hi > lo ? to_byte(255.0 * (col(i) - lo) / (hi - lo)) : 128;
    const std::string name = stem + "_vec" + std::to_string(j) + ".pgm";
    write_pgm(dir / name, img);
    notes << name << ' ' << lo << ' ' << hi << '\n';
  }
}

void export_pixel_influence(const PrincipalDecomposition<double>& pd, Index i, int width, int height,
                            const fs::path& path) {
  const Eigen::VectorXd influence = pixel_influence(pd, i);
  require_shape(influence.size(), width, height);
  const double scale = influence.cwiseAbs().maxCoeff();
  PgmImage img{width, height, std::vector<std::uint8_t>(std::size_t(influence.size()))};
  for (Index k = 0; k < influence.size(); ++k)
    img.pixels[std::size_t(k)] = scale > 0 ? to_byte(127.5 + 127.5 * influence(k) / scale) : 128;
  write_pgm(path, img);

  fs::path csv = path;
  csv.replace_extension(".csv");
  auto out = open_out(csv);
  out << "pixel,influence\n";
  for (Index k = 0; k < influence.size(); ++k) out << k << ',' << influence(k) << '\n';
}

Eigen::MatrixXd distance_matrix(const ModelState<double>& model,
                                std::span<const LabeledSubspace<double>> data) {
  std::vector<const Subspace<double>*> points;
  for (const auto& s : data) points.push_back(&s.subspace);
  for (const auto& p : model.prototypes) points.push_back(&p.subspace);
  const Index n = Index(points.size());
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) {
      const double v = adaptive_squared_distance(principal_angles(*points[std::size_t(a)], *points[std::size_t(b)]),
                                                 model.relevance);
      dist(a, b) = dist(b, a) = v;
    }
  }
  return dist;
}

void export_distance_matrix_csv(const ModelState<double>& model,
                                std::span<const LabeledSubspace<double>> data, const fs::path& path) {
  write_matrix_csv(distance_matrix(model, data), path);
  auto labels = open_out(fs::path(path.string() + ".labels.csv"));
  labels << "index,kind,label\n";
  Index row = 0;
  for (const auto& s : data) labels << row++ << ",sample," << s.label << '\n';
  for (const auto& p : model.prototypes) labels << row++ << ",prototype," << p.label << '\n';
}

void write_matrix_csv(const Eigen::MatrixXd& m, const fs::path& path) {
  auto out = open_out(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::UnsupportedFormat, "non-numeric CSV cell '" + cell + "' in " + path.string());
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::InconsistentDims, "ragged CSV: " + path.string());
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(Index(rows.size()), rows.empty() ? 0 : Index(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[std::size_t(i)][std::size_t(j)];
  return m;
}

void write_confusion_csv(const Eigen::MatrixXi& confusion, const fs::path& path) {
  auto out = open_out(path);
  out << "true\\predicted";
  for (Index j = 0; j < confusion.cols(); ++j) out << ',' << j + 1;
  out << '\n';
  for (Index i = 0; i < confusion.rows(); ++i) {
    out << i + 1;
    for (Index j = 0; j < confusion.cols(); ++j) out << ',' << confusion(i, j);
    out << '\n';
  }
}

}  // namespace grlgq::io
