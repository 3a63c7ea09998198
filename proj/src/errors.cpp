#include "utilmax/errors.hpp"

namespace utilmax {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::InvalidProbabilities: return "InvalidProbabilities";
    case ErrorCode::BrokenFiliation: return "BrokenFiliation";
    case ErrorCode::LeafNode: return "LeafNode";
    case ErrorCode::NotConcaveOnGrid: return "NotConcaveOnGrid";
    case ErrorCode::DegenerateSupport: return "DegenerateSupport";
    case ErrorCode::UnboundedObjective: return "UnboundedObjective";
    case ErrorCode::InfeasibleCone: return "InfeasibleCone";
    case ErrorCode::ArbitrageDetected: return "ArbitrageDetected";
    case ErrorCode::ValueDiverged: return "ValueDiverged";
    case ErrorCode::GridNotConverged: return "GridNotConverged";
    case ErrorCode::BoundaryOptimum: return "BoundaryOptimum";
    case ErrorCode::ZeroDerivative: return "ZeroDerivative";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace utilmax
