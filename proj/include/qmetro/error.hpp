// Copyright 2026 The qmetro Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qmetro {

enum class ErrorKind {
  NotHermitian,
  NotPsd,
  EpsilonOutOfRange,
  POutOfRange,
  DimensionTooLarge,
  DimensionMismatch,
  SingularState,
  SolverNotConverged,
  TargetNotReached,
  NotProjective,
  NotOrthonormal,
  NotUnitary,
  SingularFisher,
  EmptyCounts,
  EmptyInput,
  TooFewValues,
  SchemaMismatch,
  ConfigError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotPsd: return "NotPsd";
    case ErrorKind::EpsilonOutOfRange: return "EpsilonOutOfRange";
    case ErrorKind::POutOfRange: return "POutOfRange";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularState: return "SingularState";
    case ErrorKind::SolverNotConverged: return "SolverNotConverged";
    case ErrorKind::TargetNotReached: return "TargetNotReached";
    case ErrorKind::NotProjective: return "NotProjective";
    case ErrorKind::NotOrthonormal: return "NotOrthonormal";
    case ErrorKind::NotUnitary: return "NotUnitary";
    case ErrorKind::SingularFisher: return "SingularFisher";
    case ErrorKind::EmptyCounts: return "EmptyCounts";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::TooFewValues: return "TooFewValues";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace qmetro
