#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ectm/model.hpp"
#include "ectm/types.hpp"

namespace ectm {

struct EvalResult {
  std::int64_t cycle_index = 0;
  double rmse = 0.0;
  double max_abs_err = 0.0;
  double pearson_r = 0.0;
  SimMode mode = SimMode::FreeRunning;
};

double rmse(std::span<const double> pred, std::span<const double> truth);
double max_abs_error(std::span<const double> pred, std::span<const double> truth);

/// Pearson correlation; 0 when either sequence has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Metrics are taken over samples 1..K-1; sample 0 is the given initial
/// condition and is not a prediction.
EvalResult evaluate_cycle(const CycleData& cycle, const LinearParams& theta, SimMode mode,
                          const SocOptions& soc_options = {});

struct CycleEvaluation {
  EvalResult result;
  std::vector<double> predicted;
};

/// Evaluates independent cycles concurrently; output order follows input order.
std::vector<CycleEvaluation> evaluate_cycles(std::span<const CycleData> cycles,
                                             const LinearParams& theta, SimMode mode,
                                             const SocOptions& soc_options = {});

enum class InputProfile { ConstantCurrent, CcCvLike, RandomSteps };

const char* to_string(InputProfile profile);
InputProfile parse_input_profile(const std::string& text);

struct SynthSpec {
  LinearParams theta_true;
  InputProfile input_profile = InputProfile::RandomSteps;
  double noise_sigma = 0.0;
  std::size_t length = 5000;
  std::uint64_t seed = 1;
  double dt = 1.0;
  double q0 = 2.0;
  double soc0 = 0.5;
  double ambient = 25.0;
  std::int64_t cycle_index = 0;

  void validate() const;
};

/// Physical parameters used for synthetic fixtures: a small 18650-like cell
/// whose eta polynomial is an OCV-shaped curve of the given degree.
PhysicalParams default_synth_physical(std::size_t degree);

/// Builds the input profile, rolls the true model forward free-running and
/// adds seeded Gaussian noise to the surface temperature.
CycleData synth_generate(const SynthSpec& spec);

struct ProfileRow {
  std::int64_t cycle_index = 0;
  double t_s = 0.0;
  double temp_true_c = 0.0;
  double temp_pred_c = 0.0;
};

struct ProfileSeries {
  const CycleData* cycle;
  std::span<const double> predicted;
};

inline constexpr const char* kProfileHeader = "cycle_index,t_s,temp_true_c,temp_pred_c";

/// Long-format CSV grouped by cycle_index (stable), time-sorted within a group.
void export_profiles(std::span<const ProfileSeries> series, const std::filesystem::path& path);
std::vector<ProfileRow> read_profiles(const std::filesystem::path& path);

}  // namespace ectm
