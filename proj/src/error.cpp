#include "calibench/error.hpp"

namespace calibench {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonBinaryLabel: return "NonBinaryLabel";
    case ErrorCode::NonNumericFeature: return "NonNumericFeature";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::DegenerateClass: return "DegenerateClass";
    case ErrorCode::TooFewSamplesPerClass: return "TooFewSamplesPerClass";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::IncompleteRecords: return "IncompleteRecords";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::SingularHessian: return "SingularHessian";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::SampleSizeOutOfRange: return "SampleSizeOutOfRange";
    case ErrorCode::TooFewGroups: return "TooFewGroups";
    case ErrorCode::DegenerateGrouping: return "DegenerateGrouping";
    case ErrorCode::InvalidDF: return "InvalidDF";
    case ErrorCode::EmptyFamily: return "EmptyFamily";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateLabels:
    case ErrorCode::NotConverged:
    case ErrorCode::SingularHessian:
    case ErrorCode::DegenerateVariance:
    case ErrorCode::SampleSizeOutOfRange:
    case ErrorCode::TooFewGroups:
    case ErrorCode::DegenerateGrouping:
    case ErrorCode::InvalidDF:
    case ErrorCode::EmptyFamily:
      return true;
    default:
      return false;
  }
}

}  // namespace calibench
