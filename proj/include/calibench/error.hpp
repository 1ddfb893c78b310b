#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace calibench {

/// Failure classes raised by the library. The CLI maps them onto exit codes.
enum class ErrorCode {
  InvalidArgument,
  // data / IO
  IoError,
  EmptyFile,
  MissingColumn,
  NonBinaryLabel,
  NonNumericFeature,
  MalformedRow,
  IndexOutOfRange,
  DimensionMismatch,
  LengthMismatch,
  ProbabilityOutOfRange,
  DegenerateClass,
  TooFewSamplesPerClass,
  TooFewSamples,
  SingleClass,
  SchemaVersionMismatch,
  IncompleteRecords,
  InvalidSpec,
  // numerical
  DegenerateLabels,
  NotConverged,
  SingularHessian,
  DegenerateVariance,
  SampleSizeOutOfRange,
  TooFewGroups,
  DegenerateGrouping,
  InvalidDF,
  EmptyFamily,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// True for errors caused by the numerics rather than by the inputs' shape.
bool is_numerical(ErrorCode code);

}  // namespace calibench
