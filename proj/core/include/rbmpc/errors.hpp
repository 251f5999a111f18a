#pragma once

#include <stdexcept>
#include <string>

namespace rbmpc {

// Stable error identifiers; the CLI maps them 1:1 to process exit codes.
enum class ErrorCode : int {
  Ok = 0,
  ConfigError = 2,
  GridMismatch = 3,
  ZeroInclusionProbability = 4,
  ProbabilityMassError = 5,
  BadDimension = 6,
  SingularStepMatrix = 7,
  RiccatiBlowup = 8,
  NoConvergence = 9,
  NotStabilizing = 10,
  LineSearchDegenerate = 11,
  ZeroReference = 12,
  OutOfHorizon = 13,
  IoError = 14,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }
  const char* code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace rbmpc
