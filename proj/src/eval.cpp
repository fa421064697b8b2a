#include "ectm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "ectm/datasets.hpp"
#include "ectm/error.hpp"
#include "ectm/kernels.hpp"

namespace ectm {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorKind::ContractViolation, "prediction and truth lengths differ");
  if (a.empty()) throw Error(ErrorKind::ContractViolation, "sequences must not be empty");
}

// Open-circuit-like voltage curve and series resistance used by synthetic
// profiles.
constexpr double kOcv[] = {3.25, 0.85, -0.30, 0.20, -0.05, 0.02, -0.01, 0.005};
constexpr double kSeriesResistance = 0.06;

double synth_ocv(double soc) {
  double acc = 0.0;
  for (std::size_t j = std::size(kOcv); j-- > 0;) acc = acc * soc + kOcv[j];
  return acc;
}

std::vector<double> current_profile(const SynthSpec& spec, std::mt19937_64& rng,
                                    std::vector<double>& ambient) {
  const std::size_t n = spec.length;
  std::vector<double> current(n, 0.0);
  ambient.assign(n, spec.ambient);
  const double soc_per_amp = spec.dt / (3600.0 * spec.q0);

  switch (spec.input_profile) {
    case InputProfile::ConstantCurrent:
      std::fill(current.begin(), current.end(), 0.5 * spec.q0);
      break;

    case InputProfile::CcCvLike: {
      // Constant current until SOC 0.8, then an exponentially decaying
      // constant-voltage tail.
      const double cc = 0.75 * spec.q0;
      const double tau = 600.0;
      double soc = spec.soc0;
      std::optional<std::size_t> cv_start;
      for (std::size_t k = 0; k < n; ++k) {
        if (!cv_start && soc >= 0.8) cv_start = k;
        current[k] = cv_start ? cc * std::exp(-static_cast<double>(k - *cv_start) * spec.dt / tau)
                              : cc;
        soc = std::min(1.0, soc + current[k] * soc_per_amp);
      }
      break;
    }

    case InputProfile::RandomSteps: {
      std::uniform_int_distribution<int> duration(60, 400);
      std::uniform_real_distribution<double> magnitude(0.5 * spec.q0, 2.5 * spec.q0);
      std::uniform_real_distribution<double> offset(-3.0, 3.0);
      std::bernoulli_distribution coin(0.5);
      double soc = spec.soc0;
      std::size_t k = 0;
      while (k < n) {
        const auto len = static_cast<std::size_t>(duration(rng));
        double sign = coin(rng) ? 1.0 : -1.0;
        if (soc > 0.85) sign = -1.0;
        if (soc < 0.15) sign = 1.0;
        const double level = sign * magnitude(rng);
        const double ta = spec.ambient + offset(rng);
        for (std::size_t e = std::min(n, k + len); k < e; ++k) {
          current[k] = level;
          ambient[k] = ta;
          soc += level * soc_per_amp;
        }
      }
      break;
    }
  }
  return current;
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  return std::sqrt(kernels::sum_squared_diff_parallel(pred, truth) /
                   static_cast<double>(pred.size()));
}

double max_abs_error(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double worst = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) worst = std::max(worst, std::abs(pred[k] - truth[k]));
  return worst;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

EvalResult metrics(const CycleData& cycle, std::span<const double> predicted, SimMode mode) {
  std::vector<double> truth(cycle.size());
  for (std::size_t k = 0; k < cycle.size(); ++k) truth[k] = cycle.samples[k].ts;
  const auto p = predicted.subspan(1);
  const auto t = std::span<const double>(truth).subspan(1);
  EvalResult r;
  r.cycle_index = cycle.cycle_index;
  r.mode = mode;
  r.rmse = rmse(p, t);
  r.max_abs_err = max_abs_error(p, t);
  r.pearson_r = pearson(p, t);
  return r;
}

}  // namespace

EvalResult evaluate_cycle(const CycleData& cycle, const LinearParams& theta, SimMode mode,
                          const SocOptions& soc_options) {
  const auto predicted = simulate_cycle(cycle, theta, mode, soc_options);
  return metrics(cycle, predicted, mode);
}

std::vector<CycleEvaluation> evaluate_cycles(std::span<const CycleData> cycles,
                                             const LinearParams& theta, SimMode mode,
                                             const SocOptions& soc_options) {
  std::vector<CycleEvaluation> out(cycles.size());
  std::vector<std::exception_ptr> errors(cycles.size());
  const auto n = static_cast<std::ptrdiff_t>(cycles.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    const auto uc = static_cast<std::size_t>(c);
    try {
      out[uc].predicted = simulate_cycle(cycles[uc], theta, mode, soc_options);
      out[uc].result = metrics(cycles[uc], out[uc].predicted, mode);
    } catch (...) {
      errors[uc] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

const char* to_string(InputProfile profile) {
  switch (profile) {
    case InputProfile::ConstantCurrent: return "constant_current";
    case InputProfile::CcCvLike: return "cc_cv_like";
    case InputProfile::RandomSteps: return "random_steps";
  }
  return "unknown";
}

InputProfile parse_input_profile(const std::string& text) {
  if (text == "constant_current") return InputProfile::ConstantCurrent;
  if (text == "cc_cv_like") return InputProfile::CcCvLike;
  if (text == "random_steps") return InputProfile::RandomSteps;
  throw Error(ErrorKind::InvalidInput, "unknown input profile '" + text + "'");
}

void SynthSpec::validate() const {
  if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::InvalidInput, "noise_sigma must be >= 0");
  if (length < 10) throw Error(ErrorKind::InvalidInput, "synthetic cycles need at least 10 samples");
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidInterval, "dt must be positive");
  if (!(q0 > 0.0)) throw Error(ErrorKind::InvalidCapacity, "q0 must be positive");
  if (!(soc0 >= 0.0 && soc0 <= 1.0)) throw Error(ErrorKind::InvalidInput, "soc0 must lie in [0, 1]");
}

PhysicalParams default_synth_physical(std::size_t degree) {
  std::vector<double> eta(degree + 1, 0.0);
  // Effective OCV: the open-circuit curve minus a small entropic term.
  constexpr double kEntropic[] = {0.02, -0.03, 0.01};
  for (std::size_t j = 0; j <= degree; ++j) {
    eta[j] = j < std::size(kOcv) ? kOcv[j] : 0.0;
    if (j < std::size(kEntropic)) eta[j] -= kEntropic[j];
  }
  return PhysicalParams(3.0, 100.0, Polynomial(std::move(eta)));
}

CycleData synth_generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  CycleData cycle;
  cycle.dt = spec.dt;
  cycle.q0 = spec.q0;
  cycle.soc0 = spec.soc0;
  cycle.cycle_index = spec.cycle_index;
  cycle.meta["generator"] = std::string("synth:") + to_string(spec.input_profile);
  cycle.meta["seed"] = std::to_string(spec.seed);

  std::vector<double> ambient;
  const std::vector<double> current = current_profile(spec, rng, ambient);
  cycle.samples.resize(spec.length);
  for (std::size_t k = 0; k < spec.length; ++k) {
    Sample& s = cycle.samples[k];
    s.t = static_cast<double>(k) * spec.dt;
    s.i = current[k];
    s.ta = ambient[k];
  }
  const SocSeries soc = soc_profile(cycle);
  for (std::size_t k = 0; k < spec.length; ++k) {
    Sample& s = cycle.samples[k];
    s.v = synth_ocv(soc.values[k]) + kSeriesResistance * s.i;
  }

  // Start at thermal equilibrium and roll the true model forward.
  cycle.samples[0].ts = cycle.samples[0].ta;
  cycle.samples = [&] {
    auto s = cycle.samples;
    const auto trace = simulate_cycle(cycle, spec.theta_true, SimMode::FreeRunning);
    for (std::size_t k = 0; k < s.size(); ++k) s[k].ts = trace[k];
    return s;
  }();

  if (spec.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (Sample& s : cycle.samples) s.ts += noise(rng);
  }

  if (spec.input_profile == InputProfile::ConstantCurrent)
    cycle.meta["warning"] =
        "constant current with constant ambient makes the ambient and current features collinear";
  return cycle;
}

void export_profiles(std::span<const ProfileSeries> series, const std::filesystem::path& path) {
  if (series.empty()) throw Error(ErrorKind::InvalidInput, "no profiles to export");
  for (const auto& s : series)
    if (s.cycle == nullptr || s.predicted.size() != s.cycle->size())
      throw Error(ErrorKind::ContractViolation, "predicted profile length differs from its cycle");

  std::vector<std::size_t> order(series.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return series[a].cycle->cycle_index < series[b].cycle->cycle_index;
  });

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << kProfileHeader << '\n';
  for (std::size_t idx : order) {
    const auto& s = series[idx];
    const auto& samples = s.cycle->samples;
    std::vector<std::size_t> rows(samples.size());
    std::iota(rows.begin(), rows.end(), 0);
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) { return samples[a].t < samples[b].t; });
    const std::string label = std::to_string(s.cycle->cycle_index);
    for (std::size_t k : rows) {
      out << label << ',' << format_double(samples[k].t) << ',' << format_double(samples[k].ts)
          << ',' << format_double(s.predicted[k]) << '\n';
    }
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<ProfileRow> read_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kProfileHeader)
    throw Error(ErrorKind::Schema, path.string() + ": expected header " + kProfileHeader);
  std::vector<ProfileRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[4];
    for (auto& x : f)
      if (!std::getline(ls, x, ','))
        throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(lineno) + ": short row");
    try {
      rows.push_back({std::stoll(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3])});
    } catch (const std::exception&) {
      throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

}  // namespace ectm
