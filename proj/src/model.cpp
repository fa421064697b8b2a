#include "ectm/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ectm/error.hpp"
#include "ectm/kernels.hpp"

namespace ectm {

SocSeries soc_profile(const CycleData& cycle, const SocOptions& options) {
  if (!(cycle.q0 > 0.0))
    throw Error(ErrorKind::InvalidCapacity, "capacity q0 must be positive");
  validate_cycle(cycle);

  const auto& s = cycle.samples;
  const double scale = 1.0 / (3600.0 * cycle.q0);
  SocSeries out;
  out.values.resize(s.size());

  auto clamp = [&](double soc) {
    if (soc < options.soc_min) {
      ++out.clamp_events;
      return options.soc_min;
    }
    if (soc > options.soc_max) {
      ++out.clamp_events;
      return options.soc_max;
    }
    return soc;
  };

  out.values[0] = clamp(cycle.soc0);
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double step = s[k].t - s[k - 1].t;
    const double current =
        options.rule == SocRule::Trapezoidal ? 0.5 * (s[k - 1].i + s[k].i) : s[k - 1].i;
    out.values[k] = clamp(out.values[k - 1] + current * step * scale);
  }
  return out;
}

double poly_eval(const Polynomial& p, double soc) noexcept {
  const auto& c = p.coeffs();
  double acc = c.back();
  for (std::size_t j = c.size() - 1; j-- > 0;) acc = acc * soc + c[j];
  return acc;
}

double heat_generation(double i, double v, double soc, const Polynomial& eta) noexcept {
  return i * (v - poly_eval(eta, soc));
}

double step_physical(double ts_prev, double ta_prev, double h_prev, const PhysicalParams& p,
                     double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidInterval, "dt must be positive");
  const double eps = p.epsilon(dt);
  const double gain = 1.0 - eps;
  return eps * ts_prev + gain * ta_prev + gain * p.r_t * h_prev;
}

void feature_row_into(const Sample& prev, double soc_prev, std::size_t degree,
                      std::span<double> out) noexcept {
  out[0] = prev.ts;
  out[1] = prev.ta;
  out[2] = prev.i * prev.v;
  double power = prev.i;
  out[3] = power;
  for (std::size_t j = 1; j <= degree; ++j) {
    power *= soc_prev;
    out[3 + j] = power;
  }
}

std::vector<double> feature_row(const Sample& prev, double soc_prev, std::size_t degree) {
  std::vector<double> out(parameter_count(degree));
  feature_row_into(prev, soc_prev, degree, out);
  return out;
}

double step_linear(std::span<const double> features, const LinearParams& theta) {
  if (features.size() != theta.size()) {
    std::ostringstream os;
    os << "feature vector has " << features.size() << " entries, parameters have "
       << theta.size();
    throw Error(ErrorKind::ContractViolation, os.str());
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < features.size(); ++j) acc += theta[j] * features[j];
  return acc;
}

LinearParams params_to_linear(const PhysicalParams& p, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidInterval, "dt must be positive");
  const double eps = p.epsilon(dt);
  const double gain = 1.0 - eps;
  const double heat_gain = gain * p.r_t;
  std::vector<double> theta{eps, gain, heat_gain};
  for (double eta : p.eta.coeffs()) theta.push_back(-heat_gain * eta);
  return LinearParams(std::move(theta));
}

PhysicalParams PhysicalEstimate::to_params() const {
  if (!physical) {
    std::string msg = "identified parameters are not physical";
    for (const auto& d : diagnostics) msg += "; " + d;
    throw Error(ErrorKind::NonInvertible, msg);
  }
  return PhysicalParams(r_t, c_t, Polynomial(eta));
}

PhysicalEstimate linear_to_physical(const LinearParams& theta, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidInterval, "dt must be positive");
  const double eps = theta[0];
  if (!(eps > 0.0 && eps < 1.0)) {
    std::ostringstream os;
    os << "theta_1 = " << eps << " is not a decay factor in (0, 1)";
    throw Error(ErrorKind::NonInvertible, os.str());
  }
  if (theta[2] == 0.0) throw Error(ErrorKind::NonInvertible, "theta_3 = 0 carries no R_T");

  PhysicalEstimate est;
  const double time_constant = -dt / std::log(eps);
  est.r_t = theta[2] / (1.0 - eps);
  est.c_t = time_constant / est.r_t;
  for (std::size_t j = 3; j < theta.size(); ++j) est.eta.push_back(-theta[j] / theta[2]);
  est.consistency = std::abs(theta[0] + theta[1] - 1.0);

  if (!(est.r_t > 0.0)) {
    est.physical = false;
    est.diagnostics.push_back("non-physical: thermal resistance R_T <= 0");
  }
  if (!(est.c_t > 0.0)) {
    est.physical = false;
    est.diagnostics.push_back("non-physical: thermal capacitance C_T <= 0");
  }
  if (!(theta[1] > 0.0)) {
    est.physical = false;
    est.diagnostics.push_back("non-physical: ambient gain theta_2 <= 0");
  }
  return est;
}

const char* to_string(SimMode mode) {
  return mode == SimMode::TeacherForced ? "teacher_forced" : "free_running";
}

SimMode parse_sim_mode(const std::string& text) {
  if (text == "teacher_forced") return SimMode::TeacherForced;
  if (text == "free_running") return SimMode::FreeRunning;
  throw Error(ErrorKind::InvalidInput,
              "unknown mode '" + text + "' (expected teacher_forced or free_running)");
}

std::vector<double> simulate_cycle(const CycleData& cycle, const LinearParams& theta,
                                   SimMode mode, const SocOptions& soc_options) {
  const SocSeries soc = soc_profile(cycle, soc_options);
  const auto& s = cycle.samples;
  const std::size_t degree = theta.degree();
  const std::size_t m = theta.size();
  std::vector<double> out(s.size());
  out[0] = s[0].ts;

  if (mode == SimMode::TeacherForced) {
    const std::size_t rows = s.size() - 1;
    std::vector<double> a(rows * m);
    std::vector<double> target(rows);
    kernels::design_rows_parallel(s, soc.values, degree, a, target);
    kernels::predict_rows_parallel(a, theta.theta(), std::span<double>(out).subspan(1));
    return out;
  }

  std::vector<double> x(m);
  for (std::size_t k = 1; k < s.size(); ++k) {
    Sample prev = s[k - 1];
    prev.ts = out[k - 1];
    feature_row_into(prev, soc.values[k - 1], degree, x);
    out[k] = step_linear(x, theta);
  }
  return out;
}

}  // namespace ectm
