#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vdi {

/// Every failure the library reports carries one of these codes.
enum class ErrorCode {
  InverseOfZero,
  PointNotOnCurve,
  InvalidProfile,
  DimensionMismatch,
  NoVariables,
  WitnessInconsistent,
  DegreeExceeded,
  ShapeMismatch,
  MagnitudeOverflow,
  EntryNotInTable,
  DomainTooLarge,
  BadCutPoint,
  NonPositiveEpsilon,
  TraceMismatch,
  MalformedProof,
  NodeUnavailable,
  ShardFailed,
  DegenerateReference,
  AttestationMissing,
  AuthFailure,
  ReplayDetected,
  NoNodes,
  ConfidentialityViolation,
  PoisonedRead,
  ParseError,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vdi
