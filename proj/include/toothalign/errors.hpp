#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace toothalign {

enum class ErrorCode {
  // input validation
  InvalidArgument,
  SchemaViolation,
  WrongPointCount,
  DuplicateTooth,
  ConfigError,
  // geometry
  EmptyCloud,
  InsufficientPoints,
  DegenerateCloud,
  // case model
  MissingArchLine,
  TransformForAbsentTooth,
  MissingTransform,
  InfeasibleParams,
  // arch line
  TooFewTeeth,
  ArchOverrun,
  // augmentation
  NoCollision,
  CollisionUnresolved,
  ConstraintsUnsatisfiable,
  // losses / metrics
  CorrespondenceMismatch,
  DegenerateAxis,
  // network
  IndivisibleGrid,
  OddColumns,
  BadHeadCount,
};

std::string_view error_name(ErrorCode code);

/// True for codes caused by malformed input rather than a failed computation.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace toothalign
