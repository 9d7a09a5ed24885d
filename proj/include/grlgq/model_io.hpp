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

#include <filesystem>
#include <string>

#include "grlgq/lvq.hpp"

namespace grlgq::io {

inline constexpr int kModelFormatVersion = 1;

/// Model file layout:
///   "GRLGQ-MODEL v<version>\n"
///   u64 payload length (little endian)
///   payload: u8 mode, u64 D, u64 d, u64 p, d f64 relevance weights,
///            then per prototype an i64 label and D·d f64 entries (row-major)
///   u32 CRC-32 of the payload
std::string serialize_model(const ModelState<double>& model);
ModelState<double> deserialize_model(const std::string& bytes);

void save_model(const ModelState<double>& model, const std::filesystem::path& path);

/// Throws ModelNotFound, VersionMismatch or CorruptModel.
ModelState<double> load_model(const std::filesystem::path& path);

}  // namespace grlgq::io
