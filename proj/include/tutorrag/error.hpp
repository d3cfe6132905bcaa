// Copyright 2026 The tutorrag Authors
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

namespace tutorrag {

enum class ErrorCode {
  // ingest
  SchemaError,
  EncodingError,
  PageOutOfRange,
  EmptyMerge,
  // chunker
  PolicyError,
  EmptyDocument,
  // embed / generation transport
  AuthError,
  TransportError,
  DimensionMismatch,
  ZeroVector,
  ModelRefusal,
  // index
  DuplicateChunkId,
  EmptyIndex,
  FormatError,
  VersionMismatch,
  ChecksumError,
  TruncatedFile,
  // guardrail
  EmptyQuestion,
  ConfigError,
  // answer
  EmptyContext,
  BudgetTooSmall,
  // eval
  UndefinedMetric,
  EmptyInput,
  SuiteError,
  // generic
  InvalidArgument,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

// Every failure the library reports is an Error carrying a machine-readable
// code; callers branch on code(), messages are for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tutorrag
