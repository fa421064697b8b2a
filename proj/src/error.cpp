#include "ectm/error.hpp"

#include <sstream>

namespace ectm {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidInterval: return "invalid-interval";
    case ErrorKind::InvalidCapacity: return "invalid-capacity";
    case ErrorKind::RejectedGrid: return "rejected-grid";
    case ErrorKind::Identifiability: return "identifiability";
    case ErrorKind::NonInvertible: return "non-invertible";
    case ErrorKind::ContractViolation: return "contract-violation";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::EmptyCycle: return "empty-cycle";
    case ErrorKind::Io: return "io";
    case ErrorKind::IllConditioned: return "ill-conditioned";
    case ErrorKind::ModelMismatch: return "model-mismatch";
    case ErrorKind::NonConvergence: return "non-convergence";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return 3;
    case ErrorKind::IllConditioned: return 4;
    case ErrorKind::ModelMismatch: return 5;
    case ErrorKind::NonConvergence: return 6;
    default: return 2;
  }
}

namespace {

std::string ill_conditioned_message(double cond, const std::vector<std::string>& columns) {
  std::ostringstream os;
  os << "design matrix is ill-conditioned (condition number " << cond
     << "); offending columns:";
  for (const auto& c : columns) os << ' ' << c;
  return os.str();
}

std::string non_convergence_message(int iterations, double kkt) {
  std::ostringstream os;
  os << "box-constrained solver did not converge after " << iterations
     << " iterations (KKT residual " << kkt << ")";
  return os.str();
}

}  // namespace

IllConditionedError::IllConditionedError(double condition_number,
                                         std::vector<std::string> columns)
    : Error(ErrorKind::IllConditioned, ill_conditioned_message(condition_number, columns)),
      condition_number_(condition_number),
      columns_(std::move(columns)) {}

NonConvergenceError::NonConvergenceError(int iterations, std::vector<double> last_iterate,
                                         double kkt_residual)
    : Error(ErrorKind::NonConvergence, non_convergence_message(iterations, kkt_residual)),
      iterations_(iterations),
      last_iterate_(std::move(last_iterate)),
      kkt_residual_(kkt_residual) {}

}  // namespace ectm
