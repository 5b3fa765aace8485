// Copyright 2026 the dgvo authors
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

#include "common.hpp"

namespace dgvo {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::MissingPrior: return "MissingPrior";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoEdges: return "NoEdges";
    case ErrorCode::NotInitialized: return "NotInitialized";
    case ErrorCode::GateAlreadySet: return "GateAlreadySet";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::AssociationFailure: return "AssociationFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::FrustumViolation: return "FrustumViolation";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::PipelineError: return "PipelineError";
  }
  return "Error";
}

}  // namespace dgvo
