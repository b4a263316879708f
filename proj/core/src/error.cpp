#include "blie/error.hpp"

namespace blie {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::BudgetTooSmall: return "budget-too-small";
    case ErrorKind::InvalidLoss: return "invalid-loss";
    case ErrorKind::ArithmeticOverflow: return "arithmetic-overflow";
    case ErrorKind::ConstructionInfeasible: return "construction-infeasible";
    case ErrorKind::ResourceLimit: return "resource-limit";
    case ErrorKind::FitFailed: return "fit-failed";
    case ErrorKind::BatchFailed: return "batch-failed";
    case ErrorKind::SpawnFailed: return "spawn-failed";
    case ErrorKind::ProtocolViolation: return "protocol-violation";
    case ErrorKind::Timeout: return "timeout";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

}  // namespace blie
