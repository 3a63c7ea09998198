#pragma once

#include <stdexcept>
#include <string>

namespace utilmax {

enum class ErrorCode {
  MalformedInput,
  InvalidProbabilities,
  BrokenFiliation,
  LeafNode,
  NotConcaveOnGrid,
  DegenerateSupport,
  UnboundedObjective,
  InfeasibleCone,
  ArbitrageDetected,
  ValueDiverged,
  GridNotConverged,
  BoundaryOptimum,
  ZeroDerivative,
  BracketFailure,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& what);

}  // namespace utilmax
