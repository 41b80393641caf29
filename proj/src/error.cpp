#include "mrtee/error.hpp"

namespace mrtee {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonBinaryTreatment: return "NonBinaryTreatment";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::NonContiguousTime: return "NonContiguousTime";
    case ErrorCode::UnbalancedPanel: return "UnbalancedPanel";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateAuxiliary: return "DegenerateAuxiliary";
    case ErrorCode::LagHorizonExceeded: return "LagHorizonExceeded";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::OscillationDetected: return "OscillationDetected";
    case ErrorCode::SingularBread: return "SingularBread";
    case ErrorCode::SingularThetaBread: return "SingularThetaBread";
    case ErrorCode::SingularLeverage: return "SingularLeverage";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return 2;
    case ErrorCode::DomainError: return 43;
    case ErrorCode::MissingColumn: return 10;
    case ErrorCode::NonBinaryTreatment: return 11;
    case ErrorCode::ProbabilityOutOfRange: return 12;
    case ErrorCode::MissingValue: return 13;
    case ErrorCode::NonContiguousTime: return 14;
    case ErrorCode::UnbalancedPanel: return 15;
    case ErrorCode::ParseError: return 16;
    case ErrorCode::IoError: return 17;
    case ErrorCode::SingularGram: return 20;
    case ErrorCode::DimensionMismatch: return 21;
    case ErrorCode::DegenerateAuxiliary: return 22;
    case ErrorCode::LagHorizonExceeded: return 23;
    case ErrorCode::NonConvergence: return 24;
    case ErrorCode::SingularJacobian: return 25;
    case ErrorCode::OscillationDetected: return 26;
    case ErrorCode::SingularBread: return 30;
    case ErrorCode::SingularThetaBread: return 31;
    case ErrorCode::SingularLeverage: return 32;
    case ErrorCode::ZeroVariance: return 40;
    case ErrorCode::ConfigParse: return 41;
    case ErrorCode::UnknownTable: return 42;
  }
  return 1;
}

}  // namespace mrtee
