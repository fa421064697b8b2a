#include "ectm/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "ectm/error.hpp"

namespace ectm {

namespace {

using nlohmann::json;

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
  }
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorKind::Io, "cannot create output directory " + dir.string());
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream is(text);
  while (std::getline(is, part, sep)) parts.push_back(trim(part));
  return parts;
}

std::string relative_to(const fs::path& path, const fs::path& base) {
  return fs::relative(path, base).generic_string();
}

ManifestEntry manifest_entry(const std::string& role, const fs::path& path, const fs::path& base) {
  return {role, relative_to(path, base), sha256_hex(path)};
}

std::optional<BoxConstraints> box_from_lists(const std::optional<std::string>& lower,
                                             const std::optional<std::string>& upper,
                                             std::size_t m) {
  if (!lower && !upper) return std::nullopt;
  BoxConstraints box = BoxConstraints::unbounded(m);
  if (lower) box.lower = parse_double_list(*lower);
  if (upper) box.upper = parse_double_list(*upper);
  box.validate(m);
  return box;
}

}  // namespace

// ---- fit reports -------------------------------------------------------------

json to_json(const FitReport& r) {
  json j;
  j["theta"] = r.theta;
  j["rmse_train"] = r.rmse_train;
  j["condition_number"] = r.condition_number;
  j["residual_norm"] = r.residual_norm;
  j["active_constraints"] = r.active_constraints;
  j["consistency"] = r.consistency;
  j["base_cycle"] = r.base_cycle;
  j["solver"] = to_string(r.solver);
  j["iterations"] = r.iterations;
  j["kkt_residual"] = r.kkt_residual;
  j["objective_history"] = r.objective_history;
  j["col_labels"] = r.col_labels;
  j["rows"] = r.rows;
  j["dt"] = r.dt;
  j["q0"] = r.q0;
  j["soc0"] = r.soc0;
  return j;
}

FitReport fit_report_from_json(const json& j) {
  try {
    FitReport r;
    r.theta = j.at("theta").get<std::vector<double>>();
    r.rmse_train = j.at("rmse_train").get<double>();
    r.condition_number = j.at("condition_number").get<double>();
    r.residual_norm = j.at("residual_norm").get<double>();
    r.active_constraints = j.at("active_constraints").get<std::vector<std::size_t>>();
    r.consistency = j.at("consistency").get<double>();
    r.base_cycle = j.at("base_cycle").get<std::int64_t>();
    const auto solver = j.at("solver").get<std::string>();
    if (solver == "closed_form")
      r.solver = SolverKind::ClosedForm;
    else if (solver == "box_constrained")
      r.solver = SolverKind::BoxConstrained;
    else
      throw Error(ErrorKind::Schema, "unknown solver '" + solver + "' in fit report");
    r.iterations = j.at("iterations").get<int>();
    r.kkt_residual = j.at("kkt_residual").get<double>();
    r.objective_history = j.at("objective_history").get<std::vector<double>>();
    r.col_labels = j.at("col_labels").get<std::vector<std::string>>();
    r.rows = j.at("rows").get<std::size_t>();
    r.dt = j.at("dt").get<double>();
    r.q0 = j.at("q0").get<double>();
    r.soc0 = j.at("soc0").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed fit report: ") + e.what());
  }
}

void write_fit_report(const fs::path& path, const FitReport& report) {
  write_text(path, to_json(report).dump(2) + "\n");
}

FitReport read_fit_report(const fs::path& path) { return fit_report_from_json(read_json(path)); }

void print_fit_report(std::ostream& out, const FitReport& r) {
  for (std::size_t j = 0; j < r.theta.size(); ++j)
    out << "theta_" << j + 1 << '=' << format_double(r.theta[j]) << '\n';
  out << "rmse_train=" << format_double(r.rmse_train) << '\n'
      << "condition_number=" << format_double(r.condition_number) << '\n'
      << "residual_norm=" << format_double(r.residual_norm) << '\n'
      << "consistency=" << format_double(r.consistency) << '\n'
      << "base_cycle=" << r.base_cycle << '\n'
      << "solver=" << to_string(r.solver) << '\n'
      << "rows=" << r.rows << '\n'
      << "active_constraints=";
  if (r.active_constraints.empty()) out << "none";
  for (std::size_t k = 0; k < r.active_constraints.size(); ++k)
    out << (k ? "," : "") << r.active_constraints[k] + 1;
  out << '\n' << "kkt_residual=" << format_double(r.kkt_residual) << '\n';

  if (r.theta.size() >= 4 && r.dt > 0.0) {
    try {
      const PhysicalEstimate est = linear_to_physical(r.params(), r.dt);
      out << "physical_r_t=" << format_double(est.r_t) << '\n'
          << "physical_c_t=" << format_double(est.c_t) << '\n'
          << "physical=" << (est.physical ? "yes" : "no") << '\n';
      for (const auto& d : est.diagnostics) out << "diagnostic=" << d << '\n';
    } catch (const Error& e) {
      out << "physical=no\n" << "diagnostic=" << e.what() << '\n';
    }
  }
}

// ---- evaluation tables -------------------------------------------------------

void print_eval_table(std::ostream& out, std::span<const EvalResult> results) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::left << std::setw(12) << "cycle" << std::right << std::setw(14) << "rmse_c"
      << std::setw(16) << "max_abs_err_c" << std::setw(12) << "pearson_r" << "  mode\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : results) {
    out << std::left << std::setw(12) << r.cycle_index << std::right << std::setw(14) << r.rmse
        << std::setw(16) << r.max_abs_err << std::setw(12) << r.pearson_r << "  "
        << to_string(r.mode) << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

void write_eval_csv(const fs::path& path, std::span<const EvalResult> results) {
  std::ostringstream os;
  os << "cycle_index,rmse_c,max_abs_err_c,pearson_r,mode\n";
  for (const auto& r : results)
    os << r.cycle_index << ',' << format_double(r.rmse) << ',' << format_double(r.max_abs_err)
       << ',' << format_double(r.pearson_r) << ',' << to_string(r.mode) << '\n';
  write_text(path, os.str());
}

// ---- hashes and manifests ----------------------------------------------------

std::string sha256_hex(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Io, "sha256 initialisation failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[k]);
  return os.str();
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  json j;
  j["entries"] = json::array();
  for (const auto& e : entries)
    j["entries"].push_back({{"role", e.role}, {"path", e.path}, {"sha256", e.sha256}});
  write_text(path, j.dump(2) + "\n");
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  const json j = read_json(path);
  std::vector<ManifestEntry> entries;
  try {
    for (const auto& e : j.at("entries"))
      entries.push_back({e.at("role").get<std::string>(), e.at("path").get<std::string>(),
                         e.at("sha256").get<std::string>()});
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
  }
  return entries;
}

std::vector<std::string> verify_manifest(const fs::path& path) {
  std::vector<std::string> bad;
  const fs::path base = path.parent_path();
  for (const auto& e : read_manifest(path)) {
    const fs::path file = base / e.path;
    if (!fs::exists(file) || sha256_hex(file) != e.sha256) bad.push_back(e.path);
  }
  return bad;
}

// ---- argument helpers --------------------------------------------------------

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  for (const auto& part : split(text, ',')) {
    std::string_view v = part;
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || std::isnan(x))
      throw Error(ErrorKind::InvalidInput, "'" + part + "' is not a number");
    values.push_back(x);
  }
  return values;
}

std::vector<std::int64_t> parse_int_list(const std::string& text) {
  std::vector<std::int64_t> values;
  for (const auto& part : split(text, ',')) {
    std::int64_t x = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), x);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size())
      throw Error(ErrorKind::InvalidInput, "'" + part + "' is not an integer");
    values.push_back(x);
  }
  return values;
}

std::optional<std::int64_t> cycle_index_from_path(const fs::path& path) {
  const std::string stem = path.stem().string();
  auto end = stem.find_last_of("0123456789");
  if (end == std::string::npos) return std::nullopt;
  auto begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
  return std::stoll(stem.substr(begin, end - begin + 1));
}

// ---- ingest ------------------------------------------------------------------

namespace {

IngestOutput ingest_one(const IngestJob& job, const ColumnMap& map, const fs::path& output_dir,
                        const IngestOptions& options, std::ostream& out, json& report) {
  IngestResult r = ingest_csv(job.input, map, job.cycle_index, options);
  const fs::path target = output_dir / ("cycle_" + std::to_string(job.cycle_index) + ".csv");
  write_canonical_csv(target, r.cycle);

  const IngestReport& rep = r.report;
  out << "cycle=" << job.cycle_index << " input=" << job.input.string()
      << " output=" << target.string() << " samples=" << r.cycle.size()
      << " rows_read=" << rep.rows_read << " rows_dropped=" << rep.rows_dropped
      << " clamp_events=" << rep.clamp_events << " dt_nominal=" << format_double(rep.dt_nominal)
      << " dt_jitter_max=" << format_double(rep.dt_jitter_max)
      << " resampled=" << (rep.resampled ? "yes" : "no") << '\n';
  for (const auto& w : rep.warnings) out << "warning cycle=" << job.cycle_index << ": " << w << '\n';

  report.push_back({{"cycle_index", job.cycle_index},
                    {"input", job.input.filename().string()},
                    {"output", target.filename().string()},
                    {"samples", r.cycle.size()},
                    {"rows_read", rep.rows_read},
                    {"rows_dropped", rep.rows_dropped},
                    {"clamp_events", rep.clamp_events},
                    {"dt_nominal", rep.dt_nominal},
                    {"dt_jitter_max", rep.dt_jitter_max},
                    {"resampled", rep.resampled},
                    {"warnings", rep.warnings}});
  return {target, rep, job.cycle_index};
}

}  // namespace

std::vector<IngestOutput> cmd_ingest(const std::vector<IngestJob>& jobs, const ColumnMap& map,
                                     const fs::path& output_dir, const IngestOptions& options,
                                     std::ostream& out) {
  if (jobs.empty()) throw Error(ErrorKind::InvalidInput, "no input files given");
  ensure_directory(output_dir);
  std::vector<IngestOutput> outputs;
  json report = json::array();
  for (const auto& job : jobs) outputs.push_back(ingest_one(job, map, output_dir, options, out, report));
  write_text(output_dir / "ingest_report.json", report.dump(2) + "\n");
  return outputs;
}

CycleData load_cycle(const fs::path& path, double q0_ah, double soc0, std::int64_t cycle_index) {
  return ingest_csv(path, ColumnMap::canonical(q0_ah, soc0), cycle_index).cycle;
}

// ---- identify ----------------------------------------------------------------

FitReport cmd_identify(const IdentifyArgs& args, std::ostream& out) {
  const CycleData cycle = load_cycle(args.cycle_file, args.q0_ah, args.soc0, args.cycle_index);
  const FitReport report = fit_one_shot(cycle, args.fit);
  if (!args.report_path.empty()) {
    if (args.report_path.has_parent_path()) ensure_directory(args.report_path.parent_path());
    write_fit_report(args.report_path, report);
  }
  print_fit_report(out, report);
  return report;
}

// ---- predict -----------------------------------------------------------------

namespace {

LinearParams model_params(const FitReport& model, std::optional<std::size_t> expected_degree) {
  if (model.theta.size() < 4 || model.col_labels.size() != model.theta.size() ||
      model.col_labels != feature_labels(model.theta.size() - 4)) {
    throw Error(ErrorKind::ModelMismatch,
                "model report has " + std::to_string(model.theta.size()) + " parameters and " +
                    std::to_string(model.col_labels.size()) + " feature labels");
  }
  if (expected_degree && parameter_count(*expected_degree) != model.theta.size()) {
    throw Error(ErrorKind::ModelMismatch,
                "model has " + std::to_string(model.theta.size()) + " parameters; degree " +
                    std::to_string(*expected_degree) + " needs " +
                    std::to_string(parameter_count(*expected_degree)));
  }
  return model.params();
}

void check_grid(const FitReport& model, const CycleData& cycle) {
  if (std::abs(cycle.dt - model.dt) > kGridTolerance * model.dt) {
    std::ostringstream os;
    os << "cycle " << cycle.cycle_index << " is sampled at dt = " << cycle.dt
       << " s but the model was identified at dt = " << model.dt << " s";
    throw Error(ErrorKind::ModelMismatch, os.str());
  }
}

}  // namespace

PredictOutput cmd_predict(const PredictArgs& args, std::ostream& out) {
  const FitReport model = read_fit_report(args.model);
  const LinearParams theta = model_params(model, args.expected_degree);
  if (args.cycle_files.empty()) throw Error(ErrorKind::InvalidInput, "no cycles to predict");
  if (!args.cycle_indices.empty() && args.cycle_indices.size() != args.cycle_files.size())
    throw Error(ErrorKind::InvalidInput, "cycle index count differs from cycle file count");

  std::vector<CycleData> cycles;
  for (std::size_t k = 0; k < args.cycle_files.size(); ++k) {
    const fs::path& file = args.cycle_files[k];
    std::int64_t index = 0;
    if (!args.cycle_indices.empty()) {
      index = args.cycle_indices[k];
    } else if (auto parsed = cycle_index_from_path(file)) {
      index = *parsed;
    } else {
      throw Error(ErrorKind::InvalidInput, "cannot infer a cycle index from " + file.string());
    }
    cycles.push_back(load_cycle(file, args.q0_ah.value_or(model.q0), args.soc0.value_or(model.soc0), index));
    check_grid(model, cycles.back());
  }

  const auto evaluations = evaluate_cycles(cycles, theta, args.mode);
  PredictOutput output;
  for (const auto& e : evaluations) output.results.push_back(e.result);

  ensure_directory(args.output_dir);
  output.eval_csv = args.output_dir / "eval.csv";
  output.profiles_csv = args.output_dir / "profiles.csv";
  write_eval_csv(output.eval_csv, output.results);
  std::vector<ProfileSeries> series;
  for (std::size_t k = 0; k < cycles.size(); ++k) series.push_back({&cycles[k], evaluations[k].predicted});
  export_profiles(series, output.profiles_csv);

  print_eval_table(out, output.results);
  return output;
}

// ---- run ---------------------------------------------------------------------

void RunConfig::validate() const {
  if (std::find(eval_cycles.begin(), eval_cycles.end(), base_cycle) != eval_cycles.end())
    throw Error(ErrorKind::Schema, "base_cycle " + std::to_string(base_cycle) +
                                       " must not be among eval_cycles");
  if (eval_cycles.empty()) throw Error(ErrorKind::Schema, "eval_cycles is empty");
  if (output_dir.empty()) throw Error(ErrorKind::Schema, "output_dir is required");
  if (file_pattern.find("{}") == std::string::npos)
    throw Error(ErrorKind::Schema, "file_pattern must contain '{}'");
  if (resample_dt && !(*resample_dt > 0.0)) throw Error(ErrorKind::Schema, "resample_dt must be positive");
  if (box) box->validate(parameter_count(degree));
}

RunConfig RunConfig::from_config(const KeyValueConfig& config, const fs::path& base_dir) {
  config.require_known({"dataset", "column_map", "file_pattern", "base_cycle", "eval_cycles",
                        "degree", "box_lower", "box_upper", "mode", "output_dir", "resample_dt"});
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  RunConfig rc;
  rc.dataset = resolve(config.get("dataset"));
  rc.column_map = resolve(config.get("column_map"));
  if (auto v = config.find("file_pattern")) rc.file_pattern = *v;
  rc.base_cycle = config.get_int("base_cycle");
  try {
    rc.eval_cycles = parse_int_list(config.get("eval_cycles"));
  } catch (const Error& e) {
    throw Error(ErrorKind::Schema, config.source() + ": eval_cycles: " + e.what());
  }
  if (config.has("degree")) {
    const auto d = config.get_int("degree");
    if (d < 0) throw Error(ErrorKind::Schema, "degree must be >= 0");
    rc.degree = static_cast<std::size_t>(d);
  }
  try {
    rc.box = box_from_lists(config.find("box_lower"), config.find("box_upper"),
                            parameter_count(rc.degree));
    if (auto v = config.find("mode")) rc.mode = parse_sim_mode(*v);
  } catch (const Error& e) {
    throw Error(ErrorKind::Schema, config.source() + ": " + e.what());
  }
  rc.output_dir = resolve(config.get("output_dir"));
  if (config.has("resample_dt")) rc.resample_dt = config.get_double("resample_dt");
  rc.validate();
  return rc;
}

RunConfig RunConfig::load(const fs::path& path) {
  return from_config(KeyValueConfig::load(path), path.parent_path());
}

fs::path RunConfig::cycle_file(std::int64_t index) const {
  std::string name = file_pattern;
  name.replace(name.find("{}"), 2, std::to_string(index));
  return dataset / name;
}

RunOutput cmd_run(const RunConfig& config, std::ostream& out) {
  config.validate();
  const ColumnMap map = ColumnMap::load(config.column_map);
  const fs::path root = config.output_dir;
  const fs::path cycles_dir = root / "cycles";
  ensure_directory(cycles_dir);

  IngestOptions ingest_options;
  ingest_options.resample_dt = config.resample_dt;

  // The base cycle is required; failures on evaluation cycles are collected
  // and reported after every other output is written.
  std::vector<std::int64_t> wanted{config.base_cycle};
  wanted.insert(wanted.end(), config.eval_cycles.begin(), config.eval_cycles.end());

  std::vector<ManifestEntry> manifest;
  json ingest_report = json::array();
  std::vector<CycleData> eval_cycles;
  CycleData base;
  std::optional<Error> first_failure;
  std::vector<std::string> failures;

  for (std::size_t k = 0; k < wanted.size(); ++k) {
    const std::int64_t index = wanted[k];
    try {
      const IngestOutput ingested = ingest_one({config.cycle_file(index), index}, map, cycles_dir,
                                               ingest_options, out, ingest_report);
      CycleData cycle = load_cycle(ingested.canonical, map.q0_ah, map.soc0, index);
      manifest.push_back(manifest_entry("cycle", ingested.canonical, root));
      if (k == 0)
        base = std::move(cycle);
      else
        eval_cycles.push_back(std::move(cycle));
    } catch (const Error& e) {
      if (k == 0) throw;
      if (!first_failure) first_failure = e;
      failures.push_back("cycle " + std::to_string(index) + ": " + e.what());
    }
  }
  const fs::path ingest_json = cycles_dir / "ingest_report.json";
  write_text(ingest_json, ingest_report.dump(2) + "\n");
  manifest.push_back(manifest_entry("ingest_report", ingest_json, root));

  FitOptions fit_options;
  fit_options.degree = config.degree;
  fit_options.box = config.box;
  RunOutput result;
  result.fit = fit_one_shot(base, fit_options);
  const fs::path report_json = root / "fit_report.json";
  const fs::path report_txt = root / "fit_report.txt";
  write_fit_report(report_json, result.fit);
  {
    std::ostringstream os;
    print_fit_report(os, result.fit);
    write_text(report_txt, os.str());
    out << os.str();
  }
  manifest.push_back(manifest_entry("fit_report", report_json, root));
  manifest.push_back(manifest_entry("fit_report_text", report_txt, root));

  const LinearParams theta = result.fit.params();
  std::vector<CycleData> all{base};
  all.insert(all.end(), eval_cycles.begin(), eval_cycles.end());
  for (const auto& c : eval_cycles) check_grid(result.fit, c);
  const auto evaluations = evaluate_cycles(all, theta, config.mode);

  for (std::size_t k = 1; k < evaluations.size(); ++k) result.results.push_back(evaluations[k].result);
  const fs::path eval_csv = root / "eval.csv";
  write_eval_csv(eval_csv, result.results);
  manifest.push_back(manifest_entry("eval", eval_csv, root));
  print_eval_table(out, result.results);

  for (std::size_t k = 0; k < all.size(); ++k) {
    const fs::path profile = root / ("profile_cycle_" + std::to_string(all[k].cycle_index) + ".csv");
    const ProfileSeries series[] = {{&all[k], evaluations[k].predicted}};
    export_profiles(series, profile);
    manifest.push_back(manifest_entry("profile", profile, root));
  }

  result.manifest_path = root / "manifest.json";
  write_manifest(result.manifest_path, manifest);
  result.manifest = std::move(manifest);
  out << "manifest=" << result.manifest_path.string() << '\n';

  if (first_failure) {
    std::string msg = std::to_string(failures.size()) + " evaluation cycle(s) failed";
    for (const auto& f : failures) msg += "; " + f;
    throw Error(first_failure->kind(), msg);
  }
  return result;
}

// ---- synth -------------------------------------------------------------------

CycleData cmd_synth(const SynthArgs& args, std::ostream& out) {
  const CycleData cycle = synth_generate(args.spec);
  if (args.output.has_parent_path()) ensure_directory(args.output.parent_path());
  write_canonical_csv(args.output, cycle);

  const SynthSpec& s = args.spec;
  if (!args.fixture.empty()) {
    json j;
    j["theta_true"] = s.theta_true.theta();
    j["degree"] = s.theta_true.degree();
    j["input_profile"] = to_string(s.input_profile);
    j["noise_sigma"] = s.noise_sigma;
    j["length"] = s.length;
    j["seed"] = s.seed;
    j["dt"] = s.dt;
    j["q0"] = s.q0;
    j["soc0"] = s.soc0;
    j["ambient"] = s.ambient;
    j["cycle_index"] = s.cycle_index;
    write_text(args.fixture, j.dump(2) + "\n");
  }
  if (!args.column_map.empty())
    write_text(args.column_map, ColumnMap::canonical(s.q0, s.soc0).to_config_text());

  for (std::size_t j = 0; j < s.theta_true.size(); ++j)
    out << "theta_true_" << j + 1 << '=' << format_double(s.theta_true[j]) << '\n';
  out << "samples=" << cycle.size() << '\n' << "output=" << args.output.string() << '\n';
  if (auto it = cycle.meta.find("warning"); it != cycle.meta.end())
    out << "warning=" << it->second << '\n';
  return cycle;
}

}  // namespace ectm
