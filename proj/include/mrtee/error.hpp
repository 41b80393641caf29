#pragma once

#include <stdexcept>
#include <string>

namespace mrtee {

enum class ErrorCode {
  MissingColumn,
  NonBinaryTreatment,
  ProbabilityOutOfRange,
  MissingValue,
  NonContiguousTime,
  UnbalancedPanel,
  ParseError,
  IoError,
  SingularGram,
  DimensionMismatch,
  DegenerateAuxiliary,
  LagHorizonExceeded,
  NonConvergence,
  SingularJacobian,
  OscillationDetected,
  SingularBread,
  SingularThetaBread,
  SingularLeverage,
  ZeroVariance,
  ConfigParse,
  UnknownTable,
  DomainError,
  InvalidArgument,
};

const char* error_name(ErrorCode code);

// Process exit status used by the command-line tool. 2 is reserved for usage errors,
// which include InvalidArgument.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mrtee
