#pragma once

#include <stdexcept>
#include <string>

namespace fdc {

enum class ErrorCode {
  InvalidArgument = 1,
  DivisionNearPole,
  EmptySpectrum,
  NewtonDiverged,
  PoleCollision,
  ZeroFirstMoment,
  ZeroValue,
  BranchJump,
  DegenerateInterval,
  KernelEvaluationFailed,
  NormBoundUnreachable,
  RankDeficient,
  TooFewValid,
  IllConditionedLS,
  NoClearGap,
  EigensolveFailed,
  NonPositiveMeasure,
  NormalizationViolation,
  InvalidFamily,
  ParseError,
  IoError,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code), detail_(what) {}
  ErrorCode code() const { return code_; }
  // Message without the code name prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace fdc
