// Copyright 2026 The mgatune Authors. All Rights Reserved.
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

namespace mga {

enum class ErrorKind {
  kIngestion,
  kJoin,
  kSchema,
  kValidation,
  kLabeling,
  kState,
  kInput,
  kSelection,
  kDescriptor,
  kShape,
  kContract,
  kTraining,
  kPrediction,
  kSplit,
  kMetric,
  kReport,
  kBaseline,
  kGeneration,
  kFormat,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIngestion: return "ingestion error";
    case ErrorKind::kJoin: return "join error";
    case ErrorKind::kSchema: return "schema error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kLabeling: return "labeling error";
    case ErrorKind::kState: return "state error";
    case ErrorKind::kInput: return "input error";
    case ErrorKind::kSelection: return "selection error";
    case ErrorKind::kDescriptor: return "descriptor error";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kContract: return "contract error";
    case ErrorKind::kTraining: return "training error";
    case ErrorKind::kPrediction: return "prediction error";
    case ErrorKind::kSplit: return "split error";
    case ErrorKind::kMetric: return "metric error";
    case ErrorKind::kReport: return "report error";
    case ErrorKind::kBaseline: return "baseline error";
    case ErrorKind::kGeneration: return "generation error";
    case ErrorKind::kFormat: return "format error";
  }
  return "error";
}

// Every failure raised by the library carries a kind so callers (and the
// CLI) can tell an ingestion problem from a modelling one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mga
