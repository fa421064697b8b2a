#include "ectm/types.hpp"

#include <cmath>
#include <sstream>

#include "ectm/error.hpp"

namespace ectm {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty())
    throw Error(ErrorKind::InvalidInput, "polynomial needs at least one coefficient");
  if (!all_finite(coeffs_))
    throw Error(ErrorKind::InvalidInput, "polynomial coefficients must be finite");
}

PhysicalParams::PhysicalParams(double r_t_, double c_t_, Polynomial eta_)
    : r_t(r_t_), c_t(c_t_), eta(std::move(eta_)) {
  if (!(r_t > 0.0) || !(c_t > 0.0) || !std::isfinite(r_t) || !std::isfinite(c_t))
    throw Error(ErrorKind::InvalidInput, "thermal resistance and capacitance must be positive");
}

double PhysicalParams::epsilon(double dt) const { return std::exp(-dt / (r_t * c_t)); }

LinearParams::LinearParams(std::vector<double> theta) : theta_(std::move(theta)) {
  if (theta_.size() < 4)
    throw Error(ErrorKind::InvalidInput, "linear parameter vector needs at least 4 entries");
  if (!all_finite(theta_))
    throw Error(ErrorKind::InvalidInput, "linear parameters must be finite");
}

std::vector<std::string> feature_labels(std::size_t degree) {
  std::vector<std::string> labels{"ts", "ta", "i*v", "i"};
  for (std::size_t j = 1; j <= degree; ++j)
    labels.push_back(j == 1 ? std::string("i*soc") : "i*soc^" + std::to_string(j));
  return labels;
}

void validate_cycle(const CycleData& cycle, std::size_t parameter_count) {
  if (!(cycle.q0 > 0.0) || !std::isfinite(cycle.q0))
    throw Error(ErrorKind::InvalidCapacity, "capacity q0 must be positive");
  if (!(cycle.soc0 >= 0.0 && cycle.soc0 <= 1.0))
    throw Error(ErrorKind::InvalidInput, "initial SOC must lie in [0, 1]");
  if (!(cycle.dt > 0.0) || !std::isfinite(cycle.dt))
    throw Error(ErrorKind::InvalidInterval, "sampling interval must be positive");
  if (cycle.samples.size() < 2)
    throw Error(ErrorKind::EmptyCycle, "cycle needs at least two samples");
  if (parameter_count > 0 && cycle.samples.size() < parameter_count + 1) {
    std::ostringstream os;
    os << "cycle has " << cycle.samples.size() << " samples; identifying " << parameter_count
       << " parameters needs at least " << parameter_count + 1;
    throw Error(ErrorKind::Identifiability, os.str());
  }
  const auto& s = cycle.samples;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Sample& x = s[k];
    if (!std::isfinite(x.t) || !std::isfinite(x.i) || !std::isfinite(x.v) ||
        !std::isfinite(x.ts) || !std::isfinite(x.ta)) {
      throw Error(ErrorKind::InvalidInput, "sample " + std::to_string(k) + " is not finite");
    }
    if (x.t < 0.0)
      throw Error(ErrorKind::InvalidInput, "sample " + std::to_string(k) + " has negative time");
    if (k == 0) continue;
    const double step = x.t - s[k - 1].t;
    if (!(step > 0.0))
      throw Error(ErrorKind::RejectedGrid,
                  "sample times must be strictly increasing at sample " + std::to_string(k));
    if (std::abs(step - cycle.dt) > kGridTolerance * cycle.dt) {
      std::ostringstream os;
      os << "sample interval " << step << " s at sample " << k << " deviates from dt = "
         << cycle.dt << " s by more than " << kGridTolerance * 100 << "%";
      throw Error(ErrorKind::RejectedGrid, os.str());
    }
  }
}

}  // namespace ectm
