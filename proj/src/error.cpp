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

#include "tutorrag/error.hpp"

namespace tutorrag {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::EncodingError: return "EncodingError";
    case ErrorCode::PageOutOfRange: return "PageOutOfRange";
    case ErrorCode::EmptyMerge: return "EmptyMerge";
    case ErrorCode::PolicyError: return "PolicyError";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::ModelRefusal: return "ModelRefusal";
    case ErrorCode::DuplicateChunkId: return "DuplicateChunkId";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ChecksumError: return "ChecksumError";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::EmptyContext: return "EmptyContext";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::UndefinedMetric: return "UndefinedMetric";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::SuiteError: return "SuiteError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace tutorrag
