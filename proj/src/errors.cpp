#include "toothalign/errors.hpp"

namespace toothalign {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::WrongPointCount: return "WrongPointCount";
    case ErrorCode::DuplicateTooth: return "DuplicateTooth";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::MissingArchLine: return "MissingArchLine";
    case ErrorCode::TransformForAbsentTooth: return "TransformForAbsentTooth";
    case ErrorCode::MissingTransform: return "MissingTransform";
    case ErrorCode::InfeasibleParams: return "InfeasibleParams";
    case ErrorCode::TooFewTeeth: return "TooFewTeeth";
    case ErrorCode::ArchOverrun: return "ArchOverrun";
    case ErrorCode::NoCollision: return "NoCollision";
    case ErrorCode::CollisionUnresolved: return "CollisionUnresolved";
    case ErrorCode::ConstraintsUnsatisfiable: return "ConstraintsUnsatisfiable";
    case ErrorCode::CorrespondenceMismatch: return "CorrespondenceMismatch";
    case ErrorCode::DegenerateAxis: return "DegenerateAxis";
    case ErrorCode::IndivisibleGrid: return "IndivisibleGrid";
    case ErrorCode::OddColumns: return "OddColumns";
    case ErrorCode::BadHeadCount: return "BadHeadCount";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::SchemaViolation:
    case ErrorCode::WrongPointCount:
    case ErrorCode::DuplicateTooth:
    case ErrorCode::ConfigError:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

}  // namespace toothalign
