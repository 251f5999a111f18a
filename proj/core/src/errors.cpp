#include "rbmpc/errors.hpp"

namespace rbmpc {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ZeroInclusionProbability: return "ZeroInclusionProbability";
    case ErrorCode::ProbabilityMassError: return "ProbabilityMassError";
    case ErrorCode::BadDimension: return "BadDimension";
    case ErrorCode::SingularStepMatrix: return "SingularStepMatrix";
    case ErrorCode::RiccatiBlowup: return "RiccatiBlowup";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotStabilizing: return "NotStabilizing";
    case ErrorCode::LineSearchDegenerate: return "LineSearchDegenerate";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::OutOfHorizon: return "OutOfHorizon";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace rbmpc
