/*
 * Copyright 2026 The ptloc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PTLOC_ERROR_H_
#define PTLOC_ERROR_H_

#include <stdexcept>
#include <string>

namespace ptloc {

enum class ErrorCode {
  kInvalidParameter,
  kEmptyInput,
  kOrdering,
  kDegenerateGeometry,
  kInsufficientOverlap,
  kReference,
  kGaugeFreedom,
  kInvalidEdge,
  kNotInitialized,
  kLostLocalization,
  kAlignment,
  kParse,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception. The code lets
// callers branch on the failure class without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kOrdering: return "ordering";
    case ErrorCode::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::kInsufficientOverlap: return "insufficient-overlap";
    case ErrorCode::kReference: return "reference";
    case ErrorCode::kGaugeFreedom: return "gauge-freedom";
    case ErrorCode::kInvalidEdge: return "invalid-edge";
    case ErrorCode::kNotInitialized: return "not-initialized";
    case ErrorCode::kLostLocalization: return "lost-localization";
    case ErrorCode::kAlignment: return "alignment";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace ptloc

#endif  // PTLOC_ERROR_H_
