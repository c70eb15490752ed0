#pragma once

#include <stdexcept>
#include <string>

namespace qsteer {

enum class ErrorCode {
  InvalidInput,
  DimensionMismatch,
  NonUniqueSteadyState,
  StepSize,
  InvalidSpectrum,
  Uncontrollable,
  ZeroGap,
  Parse,
  Internal,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid input";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::NonUniqueSteadyState: return "non-unique steady state";
    case ErrorCode::StepSize: return "step size too coarse";
    case ErrorCode::InvalidSpectrum: return "invalid spectrum";
    case ErrorCode::Uncontrollable: return "uncontrollable system";
    case ErrorCode::ZeroGap: return "zero spectral gap";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Internal: return "internal error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qsteer
