#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ectm/types.hpp"

namespace ectm {

enum class SocRule { LeftRectangle, Trapezoidal };

struct SocOptions {
  double soc_min = 0.0;
  double soc_max = 1.0;
  SocRule rule = SocRule::LeftRectangle;

  static SocOptions unclamped() {
    return {-std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(), SocRule::LeftRectangle};
  }
};

struct SocSeries {
  std::vector<double> values;
  std::size_t clamp_events = 0;
};

/// Coulomb counting over the cycle:
///   soc[k] = clamp(soc[k-1] + i[k-1] * (t[k] - t[k-1]) / (3600 q0)).
SocSeries soc_profile(const CycleData& cycle, const SocOptions& options = {});

/// Horner evaluation of p at soc.
double poly_eval(const Polynomial& p, double soc) noexcept;

/// Heat generation i * (v - eta(soc)) in W. No absolute value is taken.
double heat_generation(double i, double v, double soc, const Polynomial& eta) noexcept;

/// Exact zero-order-hold step of the thermal RC pair.
double step_physical(double ts_prev, double ta_prev, double h_prev,
                     const PhysicalParams& p, double dt);

/// Writes the m = d + 4 regression features of one sample into `out`.
/// Uses 0^0 = 1, so out[3] is always the current.
void feature_row_into(const Sample& prev, double soc_prev, std::size_t degree,
                      std::span<double> out) noexcept;

std::vector<double> feature_row(const Sample& prev, double soc_prev, std::size_t degree);

/// sum_j theta[j] * features[j], accumulated left to right.
double step_linear(std::span<const double> features, const LinearParams& theta);

LinearParams params_to_linear(const PhysicalParams& p, double dt);

/// Result of inverting the linear parameter map. The ambient gain theta_2 is
/// not used; its disagreement with 1 - theta_1 is kept as `consistency`.
struct PhysicalEstimate {
  double r_t = 0.0;
  double c_t = 0.0;
  std::vector<double> eta;
  double consistency = 0.0;  // |theta_1 + theta_2 - 1|
  bool physical = true;
  std::vector<std::string> diagnostics;

  /// Throws Error(NonInvertible) when the estimate is not physical.
  PhysicalParams to_params() const;
};

PhysicalEstimate linear_to_physical(const LinearParams& theta, double dt);

enum class SimMode { TeacherForced, FreeRunning };

const char* to_string(SimMode mode);
SimMode parse_sim_mode(const std::string& text);

/// Predicted surface temperature for every sample; element 0 is the measured
/// initial temperature. Teacher-forced mode feeds the measured temperature
/// back at every step, free-running mode feeds the model's own prediction.
std::vector<double> simulate_cycle(const CycleData& cycle, const LinearParams& theta,
                                   SimMode mode, const SocOptions& soc_options = {});

}  // namespace ectm
