#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ectm/model.hpp"
#include "ectm/types.hpp"

namespace ectm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Regression system A * theta ~ target built from one cycle.
struct DesignMatrix {
  RowMatrix a;
  Eigen::VectorXd target;
  std::vector<std::string> col_labels;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(a.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(a.cols()); }
};

/// Axis-aligned feasible box; infinite entries mean no bound.
struct BoxConstraints {
  std::vector<double> lower;
  std::vector<double> upper;

  static BoxConstraints unbounded(std::size_t m);
  void validate(std::size_t m) const;
};

enum class SolverKind { ClosedForm, BoxConstrained };
const char* to_string(SolverKind kind);

struct FitReport {
  // Solvers accept any column count, so theta is kept as a plain vector;
  // params() gives the model view.
  std::vector<double> theta;
  double rmse_train = 0.0;
  double condition_number = 1.0;
  double residual_norm = 0.0;
  std::vector<std::size_t> active_constraints;
  double consistency = 0.0;
  std::int64_t base_cycle = 0;
  SolverKind solver = SolverKind::ClosedForm;

  // Solver diagnostics.
  int iterations = 0;
  double kkt_residual = 0.0;
  std::vector<double> objective_history;

  // Model context recorded by fit_one_shot for later prediction.
  std::vector<std::string> col_labels;
  std::size_t rows = 0;
  double dt = 0.0;
  double q0 = 0.0;
  double soc0 = 0.0;

  LinearParams params() const { return LinearParams(theta); }

  friend bool operator==(const FitReport&, const FitReport&) = default;
};

/// Condition numbers above this are treated as rank deficiency.
inline constexpr double kMaxConditionNumber = 1e12;

DesignMatrix build_design_matrix(const CycleData& cycle, std::size_t degree,
                                 const SocOptions& soc_options = {});

/// Unconstrained least squares via Householder QR.
FitReport solve_ols(const DesignMatrix& dm,
                    double max_condition = kMaxConditionNumber);

struct BoxSolverOptions {
  double tol = 1e-10;
  int max_iter = 500;
  double max_condition = kMaxConditionNumber;
};

/// Bounded-variable least squares (active set). The KKT test is applied to the
/// objective gradient g = 2 A^T (A theta - target) scaled by max(1, |2 A^T target|_inf).
FitReport solve_box_constrained(const DesignMatrix& dm, const BoxConstraints& box,
                                const BoxSolverOptions& options = {});

/// Largest KKT violation of theta for the box problem, in objective-gradient units.
double kkt_residual(const DesignMatrix& dm, const BoxConstraints& box,
                    std::span<const double> theta);

double objective(const DesignMatrix& dm, std::span<const double> theta);

struct FitOptions {
  std::size_t degree = 5;
  std::optional<BoxConstraints> box;
  BoxSolverOptions box_options;
  SocOptions soc_options;
};

/// One-shot identification from a single cycle.
FitReport fit_one_shot(const CycleData& cycle, const FitOptions& options = {});

}  // namespace ectm
