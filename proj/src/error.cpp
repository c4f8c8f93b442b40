#include "freedeconv/error.hpp"

namespace fdc {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DivisionNearPole: return "DivisionNearPole";
    case ErrorCode::EmptySpectrum: return "EmptySpectrum";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::PoleCollision: return "PoleCollision";
    case ErrorCode::ZeroFirstMoment: return "ZeroFirstMoment";
    case ErrorCode::ZeroValue: return "ZeroValue";
    case ErrorCode::BranchJump: return "BranchJump";
    case ErrorCode::DegenerateInterval: return "DegenerateInterval";
    case ErrorCode::KernelEvaluationFailed: return "KernelEvaluationFailed";
    case ErrorCode::NormBoundUnreachable: return "NormBoundUnreachable";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TooFewValid: return "TooFewValid";
    case ErrorCode::IllConditionedLS: return "IllConditionedLS";
    case ErrorCode::NoClearGap: return "NoClearGap";
    case ErrorCode::EigensolveFailed: return "EigensolveFailed";
    case ErrorCode::NonPositiveMeasure: return "NonPositiveMeasure";
    case ErrorCode::NormalizationViolation: return "NormalizationViolation";
    case ErrorCode::InvalidFamily: return "InvalidFamily";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace fdc
