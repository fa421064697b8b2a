#include "ectm/kernels.hpp"

#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ectm/error.hpp"
#include "ectm/model.hpp"

namespace ectm::kernels {

namespace {

void check_design_shapes(std::span<const Sample> samples, std::span<const double> soc,
                         std::size_t degree, std::span<double> a, std::span<double> target) {
  const std::size_t rows = samples.empty() ? 0 : samples.size() - 1;
  if (soc.size() != samples.size() || target.size() != rows ||
      a.size() != rows * parameter_count(degree))
    throw Error(ErrorKind::ContractViolation, "design kernel buffers have the wrong size");
}

double block_sum(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = x[k] - y[k];
    acc += d * d;
  }
  return acc;
}

}  // namespace

void design_rows_serial(std::span<const Sample> samples, std::span<const double> soc,
                        std::size_t degree, std::span<double> a, std::span<double> target) {
  check_design_shapes(samples, soc, degree, a, target);
  const std::size_t m = parameter_count(degree);
  for (std::size_t r = 0; r < target.size(); ++r) {
    feature_row_into(samples[r], soc[r], degree, a.subspan(r * m, m));
    target[r] = samples[r + 1].ts;
  }
}

void design_rows_parallel(std::span<const Sample> samples, std::span<const double> soc,
                          std::size_t degree, std::span<double> a, std::span<double> target) {
  check_design_shapes(samples, soc, degree, a, target);
  const std::size_t m = parameter_count(degree);
  const auto rows = static_cast<std::ptrdiff_t>(target.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    feature_row_into(samples[ur], soc[ur], degree, a.subspan(ur * m, m));
    target[ur] = samples[ur + 1].ts;
  }
}

void predict_rows_serial(std::span<const double> a, std::span<const double> theta,
                         std::span<double> out) {
  const std::size_t m = theta.size();
  if (a.size() != out.size() * m)
    throw Error(ErrorKind::ContractViolation, "prediction kernel buffers have the wrong size");
  for (std::size_t r = 0; r < out.size(); ++r) {
    const double* row = a.data() + r * m;
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += theta[j] * row[j];
    out[r] = acc;
  }
}

void predict_rows_parallel(std::span<const double> a, std::span<const double> theta,
                           std::span<double> out) {
  const std::size_t m = theta.size();
  if (a.size() != out.size() * m)
    throw Error(ErrorKind::ContractViolation, "prediction kernel buffers have the wrong size");
  const auto rows = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const double* row = a.data() + static_cast<std::size_t>(r) * m;
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += theta[j] * row[j];
    out[static_cast<std::size_t>(r)] = acc;
  }
}

double sum_squared_diff_serial(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(ErrorKind::ContractViolation, "sequences have different lengths");
  double total = 0.0;
  for (std::size_t start = 0; start < x.size(); start += kReductionBlock) {
    const std::size_t n = std::min(kReductionBlock, x.size() - start);
    total += block_sum(x.data() + start, y.data() + start, n);
  }
  return total;
}

double sum_squared_diff_parallel(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(ErrorKind::ContractViolation, "sequences have different lengths");
  const std::size_t blocks = (x.size() + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t start = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t n = std::min(kReductionBlock, x.size() - start);
    partial[static_cast<std::size_t>(b)] = block_sum(x.data() + start, y.data() + start, n);
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace ectm::kernels
