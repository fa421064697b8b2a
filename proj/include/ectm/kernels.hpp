#pragma once

// Row-parallel kernels used by identification and evaluation.
//
// Each kernel has a serial reference and an OpenMP version. Rows are
// independent, so both produce bitwise identical results; the reductions use a
// fixed block size so their result does not depend on the thread count.

#include <cstddef>
#include <span>

#include "ectm/types.hpp"

namespace ectm::kernels {

inline constexpr std::size_t kReductionBlock = 4096;

/// Fills a row-major (n-1) x m design matrix and its n-1 targets from n
/// samples: row r holds the features of sample r and the target ts[r+1].
void design_rows_serial(std::span<const Sample> samples, std::span<const double> soc,
                        std::size_t degree, std::span<double> a, std::span<double> target);
void design_rows_parallel(std::span<const Sample> samples, std::span<const double> soc,
                          std::size_t degree, std::span<double> a, std::span<double> target);

/// out[r] = sum_j a[r, j] * theta[j] for a row-major matrix with theta.size() columns.
void predict_rows_serial(std::span<const double> a, std::span<const double> theta,
                         std::span<double> out);
void predict_rows_parallel(std::span<const double> a, std::span<const double> theta,
                           std::span<double> out);

/// sum_k (x[k] - y[k])^2, summed per fixed-size block then across blocks.
double sum_squared_diff_serial(std::span<const double> x, std::span<const double> y);
double sum_squared_diff_parallel(std::span<const double> x, std::span<const double> y);

/// Threads OpenMP would use for the parallel kernels (1 without OpenMP).
int max_threads() noexcept;

}  // namespace ectm::kernels
