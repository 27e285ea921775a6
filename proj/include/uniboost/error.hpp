#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uniboost {

enum class ErrorCode {
  kNegativeRawScore,
  kEmptyId,
  kDuplicateId,
  kInvalidRequest,
  kInvalidPlan,
  kDuplicatePlan,
  kUnknownPlan,
  kWrongMode,
  kUnknownCandidate,
  kDegenerateParams,
  kInsufficientSamples,
  kAllZeroScores,
  kEmptyWindow,
  kInvalidEvent,
  kBinMismatch,
  kEmptyHistogram,
  kMissingDecomposition,
  kInsufficientData,
  kInvalidConfig,
  kConfigMismatch,
  kMalformedLog,
  kVersionConflict,
  kWindowOpen,
};

/// Stable error name, e.g. "NegativeRawScore". Used in CLI output and HTTP
/// error bodies.
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return to_string(code_); }

 private:
  ErrorCode code_;
};

}  // namespace uniboost
