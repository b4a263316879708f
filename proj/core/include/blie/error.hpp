#pragma once

#include <stdexcept>
#include <string>

namespace blie {

enum class ErrorKind {
  InvalidArgument,
  InvalidConfig,
  BudgetTooSmall,
  InvalidLoss,
  ArithmeticOverflow,
  ConstructionInfeasible,
  ResourceLimit,
  FitFailed,
  BatchFailed,
  SpawnFailed,
  ProtocolViolation,
  Timeout,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries one of the kinds above so
// callers (and the CLI's exit codes) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace blie
