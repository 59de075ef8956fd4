// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/error.hpp"

namespace crowdflux {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncated: return "Truncated";
    case ErrorCode::kNonFiniteFlow: return "NonFiniteFlow";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kGridTooFine: return "GridTooFine";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kInsufficientWords: return "InsufficientWords";
    case ErrorCode::kTokenMismatch: return "TokenMismatch";
    case ErrorCode::kPoolNotReady: return "PoolNotReady";
    case ErrorCode::kModelMismatch: return "ModelMismatch";
    case ErrorCode::kEmptyTruth: return "EmptyTruth";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace crowdflux
