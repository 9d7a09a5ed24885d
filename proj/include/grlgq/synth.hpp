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

#include "grlgq/data_io.hpp"

namespace grlgq::synth {

struct SynthConfig {
  int classes = 3;
  int ambient_dim = 20;
  int dim = 3;
  int train_sets_per_class = 10;
  int test_sets_per_class = 10;
  int frames_per_set = 10;
  double noise = 0.05;
  std::uint64_t seed = 1;
};

struct SynthData {
  std::vector<Eigen::MatrixXd> centers;  // one D×dim nonnegative basis per class
  std::vector<io::LabeledSet> train;
  std::vector<io::LabeledSet> test;
  int width = 0;
  int height = 0;
};

/// Image sets around random class subspaces. Each frame is
///   B_c a + σ n,   a ~ U(0,1)^dim,  n ~ N(0, I),
/// where the clean part B_c a is scaled to unit norm first. Bases are
/// entrywise half-normal so that frames stay (mostly) nonnegative and can
/// be stored as 8-bit images; negative pixels are clipped to 0 and each
/// frame is stretched to [0, 255] when written.
SynthData generate(const SynthConfig& config);

/// Image width and height with width·height = D, height the largest
/// divisor not above √D.
std::pair<int, int> image_shape(int ambient_dim);

/// Writes out/train and out/test in the image-set directory layout, one
/// frame_NNN.pgm per column.
void write_dataset(const SynthData& data, const std::filesystem::path& out);

}  // namespace grlgq::synth
