#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ectm {

enum class ErrorKind {
  InvalidInput,
  InvalidInterval,
  InvalidCapacity,
  RejectedGrid,
  Identifiability,
  NonInvertible,
  ContractViolation,
  Schema,
  EmptyCycle,
  Io,
  IllConditioned,
  ModelMismatch,
  NonConvergence,
};

const char* to_string(ErrorKind kind);

// Process exit code for the CLI: 2 schema/input, 3 I/O, 4 ill-conditioned,
// 5 model mismatch, 6 non-convergence.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class IllConditionedError : public Error {
 public:
  IllConditionedError(double condition_number, std::vector<std::string> columns);

  double condition_number() const noexcept { return condition_number_; }
  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  double condition_number_;
  std::vector<std::string> columns_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(int iterations, std::vector<double> last_iterate,
                      double kkt_residual);

  int iterations() const noexcept { return iterations_; }
  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  double kkt_residual() const noexcept { return kkt_residual_; }

 private:
  int iterations_;
  std::vector<double> last_iterate_;
  double kkt_residual_;
};

}  // namespace ectm
