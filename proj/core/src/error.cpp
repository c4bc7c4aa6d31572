#include "vdi/error.hpp"

namespace vdi {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InverseOfZero: return "InverseOfZero";
    case ErrorCode::PointNotOnCurve: return "PointNotOnCurve";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoVariables: return "NoVariables";
    case ErrorCode::WitnessInconsistent: return "WitnessInconsistent";
    case ErrorCode::DegreeExceeded: return "DegreeExceeded";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MagnitudeOverflow: return "MagnitudeOverflow";
    case ErrorCode::EntryNotInTable: return "EntryNotInTable";
    case ErrorCode::DomainTooLarge: return "DomainTooLarge";
    case ErrorCode::BadCutPoint: return "BadCutPoint";
    case ErrorCode::NonPositiveEpsilon: return "NonPositiveEpsilon";
    case ErrorCode::TraceMismatch: return "TraceMismatch";
    case ErrorCode::MalformedProof: return "MalformedProof";
    case ErrorCode::NodeUnavailable: return "NodeUnavailable";
    case ErrorCode::ShardFailed: return "ShardFailed";
    case ErrorCode::DegenerateReference: return "DegenerateReference";
    case ErrorCode::AttestationMissing: return "AttestationMissing";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::ReplayDetected: return "ReplayDetected";
    case ErrorCode::NoNodes: return "NoNodes";
    case ErrorCode::ConfidentialityViolation: return "ConfidentialityViolation";
    case ErrorCode::PoisonedRead: return "PoisonedRead";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace vdi
