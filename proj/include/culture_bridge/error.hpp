// Copyright 2026 The culture_bridge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CULTURE_BRIDGE__ERROR_HPP_
#define CULTURE_BRIDGE__ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace culture_bridge
{

enum class ErrorCode {
  // trajectory data
  MissingColumn,
  NonMonotonicTime,
  InconsistentDt,
  EmptyFile,
  MalformedRow,
  FractionOutOfRange,
  // synthetic worlds
  InvalidCultureSpec,
  DegenerateWorld,
  // scene queries
  UnknownVehicle,
  UnknownTime,
  TrackTooShort,
  // learning
  NonFiniteActivation,
  NonFiniteLoss,
  InsufficientData,
  RankDeficient,
  EmptyGrid,
  VersionMismatch,
  CorruptFile,
  // metrics
  DegenerateSample,
  VariableMismatch,
  EmptyDataset,
  InsufficientTracks,
  ZeroVariance,
  // plumbing
  InvalidConfig,
  Io,
};

constexpr std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::InconsistentDt: return "InconsistentDt";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::FractionOutOfRange: return "FractionOutOfRange";
    case ErrorCode::InvalidCultureSpec: return "InvalidCultureSpec";
    case ErrorCode::DegenerateWorld: return "DegenerateWorld";
    case ErrorCode::UnknownVehicle: return "UnknownVehicle";
    case ErrorCode::UnknownTime: return "UnknownTime";
    case ErrorCode::TrackTooShort: return "TrackTooShort";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::VariableMismatch: return "VariableMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InsufficientTracks: return "InsufficientTracks";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string & detail)
  : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail)
  {
  }

  ErrorCode code() const noexcept { return code_; }
  const std::string & detail() const noexcept { return detail_; }

private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace culture_bridge

#endif  // CULTURE_BRIDGE__ERROR_HPP_
