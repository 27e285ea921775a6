#include "uniboost/error.hpp"

namespace uniboost {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNegativeRawScore: return "NegativeRawScore";
    case ErrorCode::kEmptyId: return "EmptyId";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kInvalidRequest: return "InvalidRequest";
    case ErrorCode::kInvalidPlan: return "InvalidPlan";
    case ErrorCode::kDuplicatePlan: return "DuplicatePlan";
    case ErrorCode::kUnknownPlan: return "UnknownPlan";
    case ErrorCode::kWrongMode: return "WrongMode";
    case ErrorCode::kUnknownCandidate: return "UnknownCandidate";
    case ErrorCode::kDegenerateParams: return "DegenerateParams";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kAllZeroScores: return "AllZeroScores";
    case ErrorCode::kEmptyWindow: return "EmptyWindow";
    case ErrorCode::kInvalidEvent: return "InvalidEvent";
    case ErrorCode::kBinMismatch: return "BinMismatch";
    case ErrorCode::kEmptyHistogram: return "EmptyHistogram";
    case ErrorCode::kMissingDecomposition: return "MissingDecomposition";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kMalformedLog: return "MalformedLog";
    case ErrorCode::kVersionConflict: return "VersionConflict";
    case ErrorCode::kWindowOpen: return "WindowOpen";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace uniboost
