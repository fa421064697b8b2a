#include "ectm/identify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "ectm/error.hpp"
#include "ectm/kernels.hpp"

namespace ectm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::span<const double> row_major_span(const RowMatrix& a) {
  return {a.data(), static_cast<std::size_t>(a.size())};
}

void check_system(const DesignMatrix& dm) {
  if (dm.a.cols() == 0)
    throw Error(ErrorKind::ContractViolation, "design matrix has no columns");
  if (dm.target.size() != dm.a.rows())
    throw Error(ErrorKind::ContractViolation, "target length differs from design matrix rows");
  if (!dm.col_labels.empty() && dm.col_labels.size() != dm.cols())
    throw Error(ErrorKind::ContractViolation, "column label count differs from design matrix");
  if (dm.a.rows() < dm.a.cols()) {
    std::ostringstream os;
    os << "design matrix has " << dm.a.rows() << " rows for " << dm.a.cols()
       << " parameters; at least " << dm.a.cols() << " rows are required";
    throw Error(ErrorKind::Identifiability, os.str());
  }
  if (!dm.a.allFinite() || !dm.target.allFinite())
    throw Error(ErrorKind::InvalidInput, "design matrix or target contains non-finite values");
}

std::string column_label(const DesignMatrix& dm, Eigen::Index j) {
  if (!dm.col_labels.empty()) return dm.col_labels[static_cast<std::size_t>(j)];
  return "x" + std::to_string(j + 1);
}

// Condition number of A from the singular values of its triangular factor.
// Throws IllConditionedError naming the columns that carry the near-null
// direction.
double checked_condition(const DesignMatrix& dm, const Eigen::MatrixXd& r, double max_condition) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? smax / smin : kInf;
  if (cond <= max_condition && std::isfinite(cond)) return std::max(cond, 1.0);

  // Column j contributes |v_j| * |a_j| to the near-null combination A v ~ 0.
  std::vector<std::string> cols;
  const Eigen::VectorXd null_dir = svd.matrixV().col(sv.size() - 1);
  const Eigen::VectorXd share = null_dir.cwiseAbs().cwiseProduct(r.colwise().norm().transpose());
  const double top = share.maxCoeff();
  for (Eigen::Index j = 0; j < share.size(); ++j)
    if (share(j) >= 0.1 * top) cols.push_back(column_label(dm, j));
  throw IllConditionedError(cond, std::move(cols));
}

double check_conditioning(const DesignMatrix& dm, double max_condition) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(dm.a);
  const Eigen::Index m = dm.a.cols();
  Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(m, m).triangularView<Eigen::Upper>();
  return checked_condition(dm, r, max_condition);
}

void fill_residuals(const DesignMatrix& dm, FitReport& report) {
  std::vector<double> pred(dm.rows());
  kernels::predict_rows_parallel(row_major_span(dm.a), report.theta, pred);
  const double ss = kernels::sum_squared_diff_parallel(
      pred, std::span<const double>(dm.target.data(), dm.rows()));
  report.residual_norm = std::sqrt(ss);
  report.rmse_train = std::sqrt(ss / static_cast<double>(dm.rows()));
  report.rows = dm.rows();
  report.col_labels = dm.col_labels;
  const auto& th = report.theta;
  report.consistency = th.size() >= 2 ? std::abs(th[0] + th[1] - 1.0) : 0.0;
}

Eigen::VectorXd gradient(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& x) {
  return 2.0 * (a.transpose() * (a * x - b));
}

double objective_of(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
  return (a * x - b).squaredNorm();
}

double kkt_violation(const Eigen::VectorXd& g, const Eigen::VectorXd& x, const BoxConstraints& box) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const double lo = box.lower[uj];
    const double hi = box.upper[uj];
    double v;
    if (lo == hi)
      v = 0.0;
    else if (x(j) <= lo)
      v = std::max(0.0, -g(j));
    else if (x(j) >= hi)
      v = std::max(0.0, g(j));
    else
      v = std::abs(g(j));
    worst = std::max(worst, v);
  }
  return worst;
}

std::vector<double> to_vector(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

enum class Bound { Free, Lower, Upper };

}  // namespace

BoxConstraints BoxConstraints::unbounded(std::size_t m) {
  return {std::vector<double>(m, -kInf), std::vector<double>(m, kInf)};
}

void BoxConstraints::validate(std::size_t m) const {
  if (lower.size() != m || upper.size() != m) {
    std::ostringstream os;
    os << "box has " << lower.size() << " lower and " << upper.size() << " upper bounds for "
       << m << " parameters";
    throw Error(ErrorKind::ContractViolation, os.str());
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] ||
        lower[j] == kInf || upper[j] == -kInf) {
      throw Error(ErrorKind::InvalidInput,
                  "invalid bounds for parameter " + std::to_string(j + 1));
    }
  }
}

const char* to_string(SolverKind kind) {
  return kind == SolverKind::ClosedForm ? "closed_form" : "box_constrained";
}

DesignMatrix build_design_matrix(const CycleData& cycle, std::size_t degree,
                                 const SocOptions& soc_options) {
  const std::size_t m = parameter_count(degree);
  validate_cycle(cycle, m);
  const SocSeries soc = soc_profile(cycle, soc_options);

  DesignMatrix dm;
  const auto rows = static_cast<Eigen::Index>(cycle.size() - 1);
  dm.a.resize(rows, static_cast<Eigen::Index>(m));
  dm.target.resize(rows);
  kernels::design_rows_parallel(cycle.samples, soc.values, degree,
                                std::span<double>(dm.a.data(), static_cast<std::size_t>(dm.a.size())),
                                std::span<double>(dm.target.data(), static_cast<std::size_t>(rows)));
  dm.col_labels = feature_labels(degree);
  return dm;
}

FitReport solve_ols(const DesignMatrix& dm, double max_condition) {
  check_system(dm);
  const Eigen::Index m = dm.a.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(dm.a);
  Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(m, m).triangularView<Eigen::Upper>();

  FitReport report;
  report.condition_number = checked_condition(dm, r, max_condition);
  const Eigen::VectorXd theta = qr.solve(dm.target);
  report.theta = to_vector(theta);
  report.solver = SolverKind::ClosedForm;
  fill_residuals(dm, report);
  const Eigen::MatrixXd a = dm.a;
  report.kkt_residual = gradient(a, dm.target, theta).cwiseAbs().maxCoeff();
  report.objective_history = {objective_of(a, dm.target, theta)};
  return report;
}

double objective(const DesignMatrix& dm, std::span<const double> theta) {
  const Eigen::Map<const Eigen::VectorXd> x(theta.data(), static_cast<Eigen::Index>(theta.size()));
  return (dm.a * x - dm.target).squaredNorm();
}

double kkt_residual(const DesignMatrix& dm, const BoxConstraints& box,
                    std::span<const double> theta) {
  box.validate(dm.cols());
  const Eigen::Map<const Eigen::VectorXd> x(theta.data(), static_cast<Eigen::Index>(theta.size()));
  const Eigen::MatrixXd a = dm.a;
  return kkt_violation(gradient(a, dm.target, x), x, box);
}

FitReport solve_box_constrained(const DesignMatrix& dm, const BoxConstraints& box,
                                const BoxSolverOptions& options) {
  check_system(dm);
  const auto m = static_cast<std::size_t>(dm.a.cols());
  box.validate(m);
  if (!(options.tol > 0.0)) throw Error(ErrorKind::InvalidInput, "solver tolerance must be positive");

  FitReport report;
  report.condition_number = check_conditioning(dm, options.max_condition);
  report.solver = SolverKind::BoxConstrained;

  const Eigen::MatrixXd a = dm.a;
  const Eigen::VectorXd& b = dm.target;
  const double scale = std::max(1.0, (2.0 * (a.transpose() * b)).cwiseAbs().maxCoeff());

  // Start from the feasible point nearest the origin with every variable free.
  Eigen::VectorXd x(m);
  std::vector<Bound> state(m, Bound::Free);
  for (std::size_t j = 0; j < m; ++j) {
    x(static_cast<Eigen::Index>(j)) = std::clamp(0.0, box.lower[j], box.upper[j]);
    if (box.lower[j] == box.upper[j]) state[j] = Bound::Lower;
  }

  auto& history = report.objective_history;
  history.push_back(objective_of(a, b, x));
  int iterations = 0;
  // A released variable that is pinned again without lowering the objective
  // is skipped once, which rules out release/fix cycling.
  std::ptrdiff_t just_released = -1;
  double at_release = history.back();

  for (;;) {
    // Minimize over the free variables, walking back to the box whenever the
    // subproblem solution leaves it.
    for (;;) {
      if (++iterations > options.max_iter)
        throw NonConvergenceError(options.max_iter, to_vector(x),
                                  kkt_violation(gradient(a, b, x), x, box));

      std::vector<Eigen::Index> free_idx;
      for (std::size_t j = 0; j < m; ++j)
        if (state[j] == Bound::Free) free_idx.push_back(static_cast<Eigen::Index>(j));
      if (free_idx.empty()) break;

      Eigen::VectorXd rhs = b;
      for (std::size_t j = 0; j < m; ++j)
        if (state[j] != Bound::Free) rhs -= a.col(static_cast<Eigen::Index>(j)) * x(static_cast<Eigen::Index>(j));
      Eigen::MatrixXd af(a.rows(), static_cast<Eigen::Index>(free_idx.size()));
      for (std::size_t c = 0; c < free_idx.size(); ++c) af.col(static_cast<Eigen::Index>(c)) = a.col(free_idx[c]);
      const Eigen::VectorXd z = af.householderQr().solve(rhs);

      double alpha = 1.0;
      std::ptrdiff_t blocking = -1;
      for (std::size_t c = 0; c < free_idx.size(); ++c) {
        const Eigen::Index j = free_idx[c];
        const auto uj = static_cast<std::size_t>(j);
        const double zc = z(static_cast<Eigen::Index>(c));
        double step = 1.0;
        if (zc < box.lower[uj])
          step = (box.lower[uj] - x(j)) / (zc - x(j));
        else if (zc > box.upper[uj])
          step = (box.upper[uj] - x(j)) / (zc - x(j));
        else
          continue;
        step = std::clamp(step, 0.0, 1.0);
        if (blocking < 0 || step < alpha) {
          alpha = step;
          blocking = static_cast<std::ptrdiff_t>(c);
        }
      }

      if (blocking < 0) {
        for (std::size_t c = 0; c < free_idx.size(); ++c) x(free_idx[c]) = z(static_cast<Eigen::Index>(c));
        history.push_back(objective_of(a, b, x));
        break;
      }

      for (std::size_t c = 0; c < free_idx.size(); ++c) {
        const Eigen::Index j = free_idx[c];
        const auto uj = static_cast<std::size_t>(j);
        const double zc = z(static_cast<Eigen::Index>(c));
        x(j) += alpha * (zc - x(j));
        const bool hit = static_cast<std::ptrdiff_t>(c) == blocking;
        if (x(j) <= box.lower[uj] || (hit && zc < box.lower[uj])) {
          x(j) = box.lower[uj];
          state[uj] = Bound::Lower;
        } else if (x(j) >= box.upper[uj] || (hit && zc > box.upper[uj])) {
          x(j) = box.upper[uj];
          state[uj] = Bound::Upper;
        }
      }
      history.push_back(objective_of(a, b, x));
    }

    if (history.back() < at_release) just_released = -1;

    // Release the bound variable whose multiplier most strongly violates KKT.
    const Eigen::VectorXd w = -gradient(a, b, x);
    std::ptrdiff_t release = -1;
    double best = options.tol * scale;
    for (std::size_t j = 0; j < m; ++j) {
      if (state[j] == Bound::Free || box.lower[j] == box.upper[j]) continue;
      if (static_cast<std::ptrdiff_t>(j) == just_released) continue;
      const double pull = state[j] == Bound::Lower ? w(static_cast<Eigen::Index>(j))
                                                   : -w(static_cast<Eigen::Index>(j));
      if (pull > best) {
        best = pull;
        release = static_cast<std::ptrdiff_t>(j);
      }
    }
    if (release < 0) break;
    state[static_cast<std::size_t>(release)] = Bound::Free;
    just_released = release;
    at_release = history.back();
  }

  report.theta = to_vector(x);
  report.iterations = iterations;
  for (std::size_t j = 0; j < m; ++j)
    if (state[j] != Bound::Free) report.active_constraints.push_back(j);
  report.kkt_residual = kkt_violation(gradient(a, b, x), x, box);
  fill_residuals(dm, report);
  return report;
}

FitReport fit_one_shot(const CycleData& cycle, const FitOptions& options) {
  const DesignMatrix dm = build_design_matrix(cycle, options.degree, options.soc_options);
  FitReport report = options.box ? solve_box_constrained(dm, *options.box, options.box_options)
                                 : solve_ols(dm, options.box_options.max_condition);
  report.base_cycle = cycle.cycle_index;
  report.dt = cycle.dt;
  report.q0 = cycle.q0;
  report.soc0 = cycle.soc0;
  return report;
}

}  // namespace ectm
