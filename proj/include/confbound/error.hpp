#pragma once

#include <stdexcept>
#include <string>

namespace confbound {

enum class ErrorKind {
  InvalidJoint,
  PositivityViolation,
  ZeroArmProbability,
  InvalidExponent,
  LengthMismatch,
  NonPositiveOutcome,
  EmptyInput,
  InvalidConfig,
  DegenerateDraw,
  SingleArmDataset,
  NonBinaryTreatment,
  DimensionMismatch,
  UnknownDimension,
  DegenerateDenominator,
  NegativeWidth,
  SchemaError,
  ValueError,
  EmptyFile,
  IndexOutOfRange,
  IoError,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Exit-code class of an error: 2 for malformed input, 3 for numeric or
// runtime degeneracy.
int exit_code_for(ErrorKind kind);

}  // namespace confbound
