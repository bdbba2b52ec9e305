#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lgspdc {

enum class ErrorCode {
  OutOfRange,
  EnergyMismatch,
  NoRoot,
  IndexError,
  NoConvergence,
  DetuningOutOfRange,
  GridTooNarrow,
  GridMismatch,
  BudgetExceeded,
  DimensionMismatch,
  DegenerateSubspace,
  NoCrossing,
  EmptyMatrix,
  InvalidArgument,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the library. `code()` identifies the contract
/// that was violated; the message carries the offending values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EnergyMismatch: return "EnergyMismatch";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::IndexError: return "IndexError";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DetuningOutOfRange: return "DetuningOutOfRange";
    case ErrorCode::GridTooNarrow: return "GridTooNarrow";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateSubspace: return "DegenerateSubspace";
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace lgspdc
