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

#include "grlgq/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "grlgq/errors.hpp"
#include "grlgq/pgm.hpp"

namespace grlgq::synth {

namespace fs = std::filesystem;

namespace {

std::string padded(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03d", prefix, n);
  return buf;
}

// Clean frame plus noise, clipped at zero and stretched so the brightest
// pixel is exactly 255, then quantized and unit-normalized.
Eigen::VectorXd make_frame(const Eigen::MatrixXd& basis, double noise, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd a(basis.cols());
  for (Index k = 0; k < a.size(); ++k) a(k) = coef(rng);
  Eigen::VectorXd v = basis * a;
  v /= v.norm();
  for (Index i = 0; i < v.size(); ++i) v(i) = std::max(0.0, v(i) + noise * normal(rng));
  const double peak = v.maxCoeff();
  if (!(peak > 0)) throw Error(ErrorCode::EmptySet, "synthetic frame is blank");
  for (Index i = 0; i < v.size(); ++i) v(i) = double(std::lround(255.0 * v(i) / peak));
  return v / v.norm();
}

}  // namespace

std::pair<int, int> image_shape(int ambient_dim) {
  int height = 1;
  for (int h = 1; h * h <= ambient_dim; ++h)
    if (ambient_dim % h == 0) height = h;
  return {ambient_dim / height, height};
}

SynthData generate(const SynthConfig& c) {
  if (c.classes < 2 || c.ambient_dim < 1 || c.dim < 1 || c.dim > c.ambient_dim ||
      c.train_sets_per_class < 1 || c.test_sets_per_class < 0 || c.frames_per_set < 1 || !(c.noise >= 0)) {
    throw Error(ErrorCode::Config, "invalid synthetic dataset parameters");
  }
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SynthData data;
  std::tie(data.width, data.height) = image_shape(c.ambient_dim);
  for (int k = 0; k < c.classes; ++k) {
    Eigen::MatrixXd basis(c.ambient_dim, c.dim);
    for (Index j = 0; j < basis.cols(); ++j)
      for (Index i = 0; i < basis.rows(); ++i) basis(i, j) = std::max(0.0, normal(rng));
    data.centers.push_back(std::move(basis));
  }
  auto draw = [&](std::vector<io::LabeledSet>& into, int per_class, const std::string& split) {
    for (int k = 0; k < c.classes; ++k) {
      for (int s = 0; s < per_class; ++s) {
        io::LabeledSet set;
        set.label = k + 1;
        set.id = split + "/" + padded("class_", k + 1) + "/" + padded("set_", s);
        set.frames.resize(c.ambient_dim, c.frames_per_set);
        for (int f = 0; f < c.frames_per_set; ++f)
          set.frames.col(f) = make_frame(data.centers[std::size_t(k)], c.noise, rng);
        into.push_back(std::move(set));
      }
    }
  };
  draw(data.train, c.train_sets_per_class, "train");
  draw(data.test, c.test_sets_per_class, "test");
  return data;
}

void write_dataset(const SynthData& data, const fs::path& out) {
  auto emit = [&](const std::vector<io::LabeledSet>& sets) {
    for (const auto& set : sets) {
      const fs::path dir = out / set.id;
      fs::create_directories(dir);
      for (Index f = 0; f < set.frames.cols(); ++f) {
        const auto col = set.frames.col(f);
        const double peak = col.maxCoeff();
        io::PgmImage img{data.width, data.height, std::vector<std::uint8_t>(std::size_t(col.size()))};
        for (Index i = 0; i < col.size(); ++i)
          img.pixels[std::size_t(i)] = std::uint8_t(std::lround(255.0 * col(i) / peak));
        io::write_pgm(dir / (padded("frame_", int(f)) + ".pgm"), img);
      }
    }
  };
  emit(data.train);
  emit(data.test);
}

}  // namespace grlgq::synth
