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

#include <stdexcept>
#include <string>
#include <string_view>

namespace grlgq {

/// Failure categories. The CLI prints the category name verbatim, so the
/// names are part of the external interface.
enum class ErrorCode {
  RankDeficient,
  SingularFactor,
  NonOrthonormal,
  DimensionMismatch,
  MissingClassPrototype,
  DegenerateSample,
  AllZeroRelevance,
  NonFinite,
  BadMagic,
  TruncatedFile,
  CountMismatch,
  InconsistentDims,
  EmptySet,
  UnsupportedFormat,
  InsufficientImages,
  VersionMismatch,
  CorruptModel,
  ModelNotFound,
  Io,
  Config,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingularFactor: return "SingularFactor";
    case ErrorCode::NonOrthonormal: return "NonOrthonormal";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingClassPrototype: return "MissingClassPrototype";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::AllZeroRelevance: return "AllZeroRelevance";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::InconsistentDims: return "InconsistentDims";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::InsufficientImages: return "InsufficientImages";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::ModelNotFound: return "ModelNotFound";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace grlgq
