#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qjoint {

enum class ErrorKind {
  DimensionMismatch,
  InvalidArgument,
  NotHermitian,
  NotPsd,
  NotProjector,
  NotProjective,
  ConvergenceFailure,
  UnknownOutcome,
  ZeroProbabilityBranch,
  CombinatorialLimitExceeded,
  PrerequisiteFailed,
  DegeneratePairingFailure,
  NoFeasiblePointFound,
  ParseError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotPsd: return "NotPsd";
    case ErrorKind::NotProjector: return "NotProjector";
    case ErrorKind::NotProjective: return "NotProjective";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::UnknownOutcome: return "UnknownOutcome";
    case ErrorKind::ZeroProbabilityBranch: return "ZeroProbabilityBranch";
    case ErrorKind::CombinatorialLimitExceeded: return "CombinatorialLimitExceeded";
    case ErrorKind::PrerequisiteFailed: return "PrerequisiteFailed";
    case ErrorKind::DegeneratePairingFailure: return "DegeneratePairingFailure";
    case ErrorKind::NoFeasiblePointFound: return "NoFeasiblePointFound";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every library failure is reported through this type; `kind()` is the
/// machine-readable category and `what()` carries the detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace qjoint
