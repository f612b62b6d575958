#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace distdetect {

enum class ErrorKind {
  InvalidBelief,
  AbsoluteContinuityViolation,
  NonFiniteInput,
  ZeroLikelihoodEntry,
  NotIdentifiable,
  BadRowSum,
  InvalidMatrix,
  IsolatedAgent,
  NoConvergence,
  DimensionMismatch,
  DegenerateNetwork,
  DegenerateInputs,
  InvalidScenario,
  UnderflowWindow,
  ConfigInvalid,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidBelief: return "InvalidBelief";
    case ErrorKind::AbsoluteContinuityViolation: return "AbsoluteContinuityViolation";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::ZeroLikelihoodEntry: return "ZeroLikelihoodEntry";
    case ErrorKind::NotIdentifiable: return "NotIdentifiable";
    case ErrorKind::BadRowSum: return "BadRowSum";
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::IsolatedAgent: return "IsolatedAgent";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DegenerateNetwork: return "DegenerateNetwork";
    case ErrorKind::DegenerateInputs: return "DegenerateInputs";
    case ErrorKind::InvalidScenario: return "InvalidScenario";
    case ErrorKind::UnderflowWindow: return "UnderflowWindow";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

// All library failures surface as this exception; kind() lets callers
// branch without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) {
  throw Error(kind, detail);
}

}  // namespace distdetect
