#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ectm {

/// One measurement. Current is negative while discharging and positive while
/// charging.
struct Sample {
  double t = 0.0;   // s since cycle start
  double i = 0.0;   // A
  double v = 0.0;   // V
  double ts = 0.0;  // surface temperature, degC
  double ta = 0.0;  // ambient temperature, degC
};

/// One charge or discharge cycle on a (nearly) uniform time grid.
struct CycleData {
  std::vector<Sample> samples;
  double dt = 1.0;    // nominal sampling interval, s
  double q0 = 1.0;    // maximum available capacity, Ah
  double soc0 = 0.0;  // initial state of charge
  std::int64_t cycle_index = 0;
  std::map<std::string, std::string> meta;

  std::size_t size() const noexcept { return samples.size(); }
};

/// Largest relative deviation of any sample interval from the nominal dt
/// accepted by the simulation and identification kernels.
inline constexpr double kGridTolerance = 0.01;

/// Checks every CycleData invariant. When `parameter_count` is non-zero the
/// cycle must also hold at least parameter_count + 1 samples, one regression row per parameter.
/// Throws Error on the first violation.
void validate_cycle(const CycleData& cycle, std::size_t parameter_count = 0);

/// Coefficients of a polynomial in SOC; coeffs[j] multiplies soc^j.
class Polynomial {
 public:
  explicit Polynomial(std::vector<double> coeffs);

  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  std::size_t degree() const noexcept { return coeffs_.size() - 1; }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  std::vector<double> coeffs_;
};

/// Physical thermal parameters: thermal resistance (K/W), thermal capacitance
/// (J/K) and the effective open-circuit-voltage polynomial eta(soc).
struct PhysicalParams {
  double r_t;
  double c_t;
  Polynomial eta;

  PhysicalParams(double r_t, double c_t, Polynomial eta);

  /// exp(-dt / (r_t * c_t)), the per-step decay of the RC pair.
  double epsilon(double dt) const;
};

/// Parameters of the linear one-step model
///   ts[k] = sum_j theta[j] * x[j][k-1]
/// with features ordered [ts, ta, i*v, i, i*soc, ..., i*soc^d].
class LinearParams {
 public:
  explicit LinearParams(std::vector<double> theta);

  const std::vector<double>& theta() const noexcept { return theta_; }
  std::size_t size() const noexcept { return theta_.size(); }
  std::size_t degree() const noexcept { return theta_.size() - 4; }
  double operator[](std::size_t j) const { return theta_[j]; }

  friend bool operator==(const LinearParams&, const LinearParams&) = default;

 private:
  std::vector<double> theta_;
};

/// Number of linear parameters for a heat polynomial of degree d.
constexpr std::size_t parameter_count(std::size_t degree) noexcept { return degree + 4; }

/// Column labels x1..xm, e.g. "ts", "ta", "i*v", "i", "i*soc", "i*soc^2".
std::vector<std::string> feature_labels(std::size_t degree);

}  // namespace ectm
