#pragma once

// Reproducible runs behind the `ectm` command line tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ectm/datasets.hpp"
#include "ectm/eval.hpp"
#include "ectm/identify.hpp"

namespace ectm {

namespace fs = std::filesystem;

// ---- fit report files ------------------------------------------------------

nlohmann::json to_json(const FitReport& report);
FitReport fit_report_from_json(const nlohmann::json& j);

void write_fit_report(const fs::path& path, const FitReport& report);
FitReport read_fit_report(const fs::path& path);

/// key=value lines: theta_1..theta_m, rmse_train, condition_number, ...
void print_fit_report(std::ostream& out, const FitReport& report);

// ---- evaluation tables -----------------------------------------------------

void print_eval_table(std::ostream& out, std::span<const EvalResult> results);
void write_eval_csv(const fs::path& path, std::span<const EvalResult> results);

// ---- content hashes --------------------------------------------------------

std::string sha256_hex(const fs::path& path);

struct ManifestEntry {
  std::string role;
  std::string path;  // relative to the manifest directory
  std::string sha256;
};

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const fs::path& path);

/// Paths (relative) whose current content hash differs from the manifest.
std::vector<std::string> verify_manifest(const fs::path& path);

// ---- commands --------------------------------------------------------------

/// Last run of digits in the file stem, e.g. "cycle_015.csv" -> 15.
std::optional<std::int64_t> cycle_index_from_path(const fs::path& path);

struct IngestJob {
  fs::path input;
  std::int64_t cycle_index = 0;
};

struct IngestOutput {
  fs::path canonical;
  IngestReport report;
  std::int64_t cycle_index = 0;
};

/// Ingests every job into `output_dir/cycle_<index>.csv` and writes
/// `output_dir/ingest_report.json`.
std::vector<IngestOutput> cmd_ingest(const std::vector<IngestJob>& jobs, const ColumnMap& map,
                                     const fs::path& output_dir, const IngestOptions& options,
                                     std::ostream& out);

/// Loads a canonical cycle file.
CycleData load_cycle(const fs::path& path, double q0_ah, double soc0, std::int64_t cycle_index);

struct IdentifyArgs {
  fs::path cycle_file;
  std::int64_t cycle_index = 0;
  double q0_ah = 0.0;
  double soc0 = 0.0;
  FitOptions fit;
  fs::path report_path;
};

FitReport cmd_identify(const IdentifyArgs& args, std::ostream& out);

struct PredictArgs {
  fs::path model;
  std::vector<fs::path> cycle_files;
  std::vector<std::int64_t> cycle_indices;  // empty: parsed from file names
  std::optional<double> q0_ah;              // default: model's base cycle
  std::optional<double> soc0;
  std::optional<std::size_t> expected_degree;
  SimMode mode = SimMode::FreeRunning;
  fs::path output_dir;
};

struct PredictOutput {
  std::vector<EvalResult> results;
  fs::path eval_csv;
  fs::path profiles_csv;
};

PredictOutput cmd_predict(const PredictArgs& args, std::ostream& out);

struct RunConfig {
  fs::path dataset;     // directory with one export per cycle
  fs::path column_map;  // ColumnMap configuration file
  std::string file_pattern = "cycle_{}.csv";
  std::int64_t base_cycle = 0;
  std::vector<std::int64_t> eval_cycles;
  std::size_t degree = 5;
  std::optional<BoxConstraints> box;
  SimMode mode = SimMode::FreeRunning;
  fs::path output_dir;
  std::optional<double> resample_dt;

  void validate() const;

  /// Relative paths are resolved against `base_dir`.
  static RunConfig from_config(const KeyValueConfig& config, const fs::path& base_dir);
  static RunConfig load(const fs::path& path);

  fs::path cycle_file(std::int64_t index) const;
};

struct RunOutput {
  FitReport fit;
  std::vector<EvalResult> results;
  std::vector<ManifestEntry> manifest;
  fs::path manifest_path;
};

RunOutput cmd_run(const RunConfig& config, std::ostream& out);

struct SynthArgs {
  SynthSpec spec;
  fs::path output;          // canonical cycle CSV
  fs::path fixture;         // JSON with theta_true and generator settings
  fs::path column_map;      // optional: ColumnMap that reads `output`
};

CycleData cmd_synth(const SynthArgs& args, std::ostream& out);

/// Parses "a,b,c" into doubles; "inf", "+inf" and "-inf" are accepted.
std::vector<double> parse_double_list(const std::string& text);
std::vector<std::int64_t> parse_int_list(const std::string& text);

}  // namespace ectm
