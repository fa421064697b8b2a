#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ectm/types.hpp"

namespace ectm {

/// Parsed `key = value` configuration. Blank lines and lines starting with
/// '#' are ignored; keys must be unique.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;

  /// Throws Error(Schema) naming the first key not in `allowed`.
  void require_known(const std::vector<std::string>& allowed) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  const std::string& source() const noexcept { return source_; }

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
};

enum class TimeUnit { Seconds, Milliseconds, Hours };
enum class TempUnit { Celsius, Kelvin };
enum class CurrentSign { AsIs, Flipped };

/// How to read one vendor CSV export.
struct ColumnMap {
  std::string time_col;
  std::string current_col;
  std::string voltage_col;
  std::string temp_col;
  std::optional<std::string> ambient_col;
  std::optional<double> ambient_const;
  TimeUnit time_unit = TimeUnit::Seconds;
  TempUnit temp_unit = TempUnit::Celsius;
  CurrentSign current_sign = CurrentSign::AsIs;
  double q0_ah = 0.0;
  double soc0 = 0.0;

  void validate() const;

  static ColumnMap from_config(const KeyValueConfig& config);
  static ColumnMap load(const std::filesystem::path& path);

  /// Map that reads the canonical cycle schema as-is.
  static ColumnMap canonical(double q0_ah, double soc0);

  std::string to_config_text() const;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::size_t clamp_events = 0;
  double dt_nominal = 0.0;
  double dt_jitter_max = 0.0;
  bool resampled = false;
  std::vector<std::string> warnings;
};

struct IngestOptions {
  /// Forces resampling at this interval; otherwise the grid is kept when it is
  /// uniform within tolerance and resampled at the default dt when not.
  std::optional<double> resample_dt;
};

struct IngestResult {
  CycleData cycle;
  IngestReport report;
};

IngestResult ingest_csv(const std::filesystem::path& path, const ColumnMap& map,
                        std::int64_t cycle_index, const IngestOptions& options = {});
IngestResult ingest_csv(std::istream& in, const ColumnMap& map, std::int64_t cycle_index,
                        const IngestOptions& options = {}, const std::string& source = "<stream>");

/// Linear interpolation of every channel onto t = 0, dt, 2 dt, ... within the
/// original span.
CycleData resample_uniform(const CycleData& cycle, double dt);

/// Median sample interval rounded to three significant digits.
double default_resample_dt(std::span<const Sample> samples);

/// 100 * (1 - q_cycle / q_nominal).
double capacity_fade(double q_cycle, double q_nominal);

inline constexpr const char* kCanonicalHeader = "t_s,current_a,voltage_v,temp_c,ambient_c";

/// Writes the canonical cycle CSV with shortest round-trip number formatting.
void write_canonical_csv(std::ostream& out, const CycleData& cycle);
void write_canonical_csv(const std::filesystem::path& path, const CycleData& cycle);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace ectm
