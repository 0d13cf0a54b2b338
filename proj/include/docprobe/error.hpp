// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace docprobe {

enum class ErrorCode {
  NotFound,
  NoTypeDeclaration,
  EmptyCorpus,
  MissingPlaceholder,
  BackendUnavailable,
  FixtureMissing,
  RateLimited,
  NoPropertiesFound,
  NoTestsParsed,
  NoTestFiles,
  UnbalancedHost,
  MixedComments,
  NonPositiveWeight,
  OutOfRange,
  EmptyList,
  DegenerateSample,
  SingleClass,
  ConstantScores,
  NoPositives,
  EmptyInput,
  InvalidCounts,
  InvalidConfig,
  InsufficientLabels,
  UnknownRun,
  StageNotComplete,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NoTypeDeclaration: return "NoTypeDeclaration";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::FixtureMissing: return "FixtureMissing";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::NoPropertiesFound: return "NoPropertiesFound";
    case ErrorCode::NoTestsParsed: return "NoTestsParsed";
    case ErrorCode::NoTestFiles: return "NoTestFiles";
    case ErrorCode::UnbalancedHost: return "UnbalancedHost";
    case ErrorCode::MixedComments: return "MixedComments";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::ConstantScores: return "ConstantScores";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InsufficientLabels: return "InsufficientLabels";
    case ErrorCode::UnknownRun: return "UnknownRun";
    case ErrorCode::StageNotComplete: return "StageNotComplete";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code. Some
/// codes (NoPropertiesFound, NoTestsParsed, EmptyCorpus) are signals that the
/// pipeline catches and turns into empty results rather than aborting.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) +
                           (detail.empty() ? "" : ": " + detail)),
        code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace docprobe
