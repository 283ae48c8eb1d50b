#include "confbound/error.hpp"

namespace confbound {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidJoint: return "InvalidJoint";
    case ErrorKind::PositivityViolation: return "PositivityViolation";
    case ErrorKind::ZeroArmProbability: return "ZeroArmProbability";
    case ErrorKind::InvalidExponent: return "InvalidExponent";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::NonPositiveOutcome: return "NonPositiveOutcome";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::DegenerateDraw: return "DegenerateDraw";
    case ErrorKind::SingleArmDataset: return "SingleArmDataset";
    case ErrorKind::NonBinaryTreatment: return "NonBinaryTreatment";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnknownDimension: return "UnknownDimension";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::NegativeWidth: return "NegativeWidth";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ValueError: return "ValueError";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::PositivityViolation:
    case ErrorKind::ZeroArmProbability:
    case ErrorKind::NonPositiveOutcome:
    case ErrorKind::DegenerateDraw:
    case ErrorKind::SingleArmDataset:
    case ErrorKind::DegenerateDenominator:
    case ErrorKind::IoError:
      return 3;
    default:
      return 2;
  }
}

}  // namespace confbound
