// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crowdflux {

enum class ErrorCode {
  kBadMagic,
  kTruncated,
  kNonFiniteFlow,
  kIo,
  kParse,
  kInvalidConfig,
  kIndexOutOfRange,
  kGridTooFine,
  kDimensionMismatch,
  kDomainError,
  kInsufficientWords,
  kTokenMismatch,
  kPoolNotReady,
  kModelMismatch,
  kEmptyTruth,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. The code is stable and is what the
/// CLI maps to exit statuses; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace crowdflux
