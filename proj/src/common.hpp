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

#ifndef DGVO_COMMON_HPP
#define DGVO_COMMON_HPP

#include <stdexcept>
#include <string>

namespace dgvo {

enum class ErrorCode {
  ConfigError,
  NonPositiveDepth,
  MissingPrior,
  SingularSystem,
  NoEdges,
  NotInitialized,
  GateAlreadySet,
  DegenerateGeometry,
  AssociationFailure,
  ParseError,
  FormatError,
  DimensionMismatch,
  FrustumViolation,
  IoError,
  PipelineError,
};

const char* error_code_name(ErrorCode code);

/// All library failures are reported as Error; `code` identifies the
/// condition so callers (and the C boundary) can map it without parsing
/// the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dgvo

#endif  // DGVO_COMMON_HPP
