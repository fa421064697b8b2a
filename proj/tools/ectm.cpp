// ectm: ingest battery cycle exports, identify the thermal model from one
// cycle and predict surface temperature on other cycles.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ectm/error.hpp"
#include "ectm/pipeline.hpp"

namespace {

using namespace ectm;

std::optional<BoxConstraints> box_from_flags(const std::string& lower, const std::string& upper,
                                             std::size_t m) {
  if (lower.empty() && upper.empty()) return std::nullopt;
  BoxConstraints box = BoxConstraints::unbounded(m);
  if (!lower.empty()) box.lower = parse_double_list(lower);
  if (!upper.empty()) box.upper = parse_double_list(upper);
  box.validate(m);
  return box;
}

std::int64_t index_for(const fs::path& file, std::optional<std::int64_t> given) {
  if (given) return *given;
  if (auto parsed = cycle_index_from_path(file)) return *parsed;
  throw Error(ErrorKind::InvalidInput, "cannot infer a cycle index from " + file.string() +
                                           "; pass --cycle-index");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lumped electro-thermal battery surface temperature model"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Convert CSV exports to canonical cycle files");
  std::string ingest_map, ingest_out, ingest_cycles;
  std::optional<double> ingest_dt;
  std::vector<std::string> ingest_files;
  ingest->add_option("--map", ingest_map, "ColumnMap configuration file")->required();
  ingest->add_option("--out", ingest_out, "Output directory")->required();
  ingest->add_option("--cycles", ingest_cycles, "Comma-separated cycle indices, one per file");
  ingest->add_option("--resample-dt", ingest_dt, "Resample every cycle to this interval (s)");
  ingest->add_option("files", ingest_files, "Input CSV exports")->required();

  // identify
  auto* identify = app.add_subcommand("identify", "Fit the model on one cycle");
  std::string id_cycle, id_map, id_config, id_report = "fit_report.json", id_lower, id_upper;
  std::optional<std::int64_t> id_index;
  std::optional<double> id_q0;
  double id_soc0 = 0.0;
  std::size_t id_degree = 5;
  double id_tol = 1e-10;
  int id_max_iter = 500;
  identify->add_option("--cycle", id_cycle, "Canonical cycle CSV");
  identify->add_option("--config", id_config, "Run configuration; fits its base cycle");
  identify->add_option("--cycle-index", id_index, "Cycle index (default: from file name)");
  identify->add_option("--map", id_map, "ColumnMap file supplying q0_ah and soc0");
  identify->add_option("--q0-ah", id_q0, "Capacity in Ah");
  identify->add_option("--soc0", id_soc0, "Initial SOC");
  identify->add_option("--degree", id_degree, "Heat polynomial degree")->capture_default_str();
  identify->add_option("--box-lower", id_lower, "Comma-separated lower bounds (inf allowed)");
  identify->add_option("--box-upper", id_upper, "Comma-separated upper bounds (inf allowed)");
  identify->add_option("--tol", id_tol, "KKT tolerance for the box solver")->capture_default_str();
  identify->add_option("--max-iter", id_max_iter, "Iteration cap for the box solver")->capture_default_str();
  identify->add_option("--report", id_report, "JSON report path")->capture_default_str();

  // predict
  auto* predict = app.add_subcommand("predict", "Predict cycles with an identified model");
  std::string pr_model, pr_out = ".", pr_mode = "free_running", pr_indices;
  std::optional<double> pr_q0, pr_soc0;
  std::optional<std::size_t> pr_degree;
  std::vector<std::string> pr_files;
  predict->add_option("--model", pr_model, "Fit report JSON")->required();
  predict->add_option("--out", pr_out, "Output directory")->capture_default_str();
  predict->add_option("--mode", pr_mode, "free_running or teacher_forced")->capture_default_str();
  predict->add_option("--cycle-indices", pr_indices, "Comma-separated indices, one per file");
  predict->add_option("--q0-ah", pr_q0, "Capacity in Ah (default: model's base cycle)");
  predict->add_option("--soc0", pr_soc0, "Initial SOC (default: model's base cycle)");
  predict->add_option("--degree", pr_degree, "Expected heat polynomial degree");
  predict->add_option("files", pr_files, "Canonical cycle CSVs")->required();

  // run
  auto* run = app.add_subcommand("run", "Ingest, identify, predict and export from a config file");
  std::string run_config;
  run->add_option("config", run_config, "Run configuration file")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cycle fixture");
  std::string sy_profile = "random_steps", sy_out, sy_fixture, sy_map, sy_theta, sy_eta;
  SynthSpec spec{LinearParams(std::vector<double>(9, 0.0))};
  std::size_t sy_degree = 5;
  std::optional<double> sy_rt, sy_ct;
  synth->add_option("--profile", sy_profile, "constant_current, cc_cv_like or random_steps")->capture_default_str();
  synth->add_option("--length", spec.length, "Samples")->capture_default_str();
  synth->add_option("--noise-sigma", spec.noise_sigma, "Temperature noise (degC)")->capture_default_str();
  synth->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
  synth->add_option("--dt", spec.dt, "Sampling interval (s)")->capture_default_str();
  synth->add_option("--q0-ah", spec.q0, "Capacity (Ah)")->capture_default_str();
  synth->add_option("--soc0", spec.soc0, "Initial SOC")->capture_default_str();
  synth->add_option("--ambient", spec.ambient, "Mean ambient temperature (degC)")->capture_default_str();
  synth->add_option("--cycle-index", spec.cycle_index, "Cycle index")->capture_default_str();
  synth->add_option("--degree", sy_degree, "Heat polynomial degree")->capture_default_str();
  synth->add_option("--theta", sy_theta, "True linear parameters (comma-separated)");
  synth->add_option("--r-t", sy_rt, "True thermal resistance (K/W)");
  synth->add_option("--c-t", sy_ct, "True thermal capacitance (J/K)");
  synth->add_option("--eta", sy_eta, "True eta coefficients (comma-separated)");
  synth->add_option("--out", sy_out, "Canonical cycle CSV to write")->required();
  synth->add_option("--fixture", sy_fixture, "JSON fixture with the true parameters");
  synth->add_option("--map-out", sy_map, "ColumnMap file that reads the output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (ingest->parsed()) {
      const ColumnMap map = ColumnMap::load(ingest_map);
      std::vector<std::int64_t> indices;
      if (!ingest_cycles.empty()) indices = parse_int_list(ingest_cycles);
      if (!indices.empty() && indices.size() != ingest_files.size())
        throw Error(ErrorKind::InvalidInput, "--cycles needs one index per input file");
      std::vector<IngestJob> jobs;
      for (std::size_t k = 0; k < ingest_files.size(); ++k) {
        const fs::path file = ingest_files[k];
        jobs.push_back({file, indices.empty() ? index_for(file, std::nullopt) : indices[k]});
      }
      IngestOptions options;
      options.resample_dt = ingest_dt;
      cmd_ingest(jobs, map, ingest_out, options, std::cout);
    } else if (identify->parsed()) {
      IdentifyArgs args;
      args.fit.degree = id_degree;
      args.fit.box_options.tol = id_tol;
      args.fit.box_options.max_iter = id_max_iter;
      if (!id_config.empty()) {
        const RunConfig rc = RunConfig::load(id_config);
        const ColumnMap map = ColumnMap::load(rc.column_map);
        IngestOptions options;
        options.resample_dt = rc.resample_dt;
        const CycleData cycle =
            ingest_csv(rc.cycle_file(rc.base_cycle), map, rc.base_cycle, options).cycle;
        args.fit.degree = rc.degree;
        args.fit.box = rc.box;
        const FitReport report = fit_one_shot(cycle, args.fit);
        fs::create_directories(rc.output_dir);
        write_fit_report(rc.output_dir / "fit_report.json", report);
        print_fit_report(std::cout, report);
        return 0;
      }
      if (id_cycle.empty())
        throw Error(ErrorKind::InvalidInput, "identify needs --cycle or --config");
      args.cycle_file = id_cycle;
      args.cycle_index = index_for(id_cycle, id_index);
      if (!id_map.empty()) {
        const ColumnMap map = ColumnMap::load(id_map);
        args.q0_ah = map.q0_ah;
        args.soc0 = map.soc0;
      } else if (id_q0) {
        args.q0_ah = *id_q0;
        args.soc0 = id_soc0;
      } else {
        throw Error(ErrorKind::InvalidInput, "identify needs --map or --q0-ah");
      }
      args.fit.box = box_from_flags(id_lower, id_upper, parameter_count(id_degree));
      args.report_path = id_report;
      cmd_identify(args, std::cout);
    } else if (predict->parsed()) {
      PredictArgs args;
      args.model = pr_model;
      for (const auto& f : pr_files) args.cycle_files.emplace_back(f);
      if (!pr_indices.empty()) args.cycle_indices = parse_int_list(pr_indices);
      args.q0_ah = pr_q0;
      args.soc0 = pr_soc0;
      args.expected_degree = pr_degree;
      args.mode = parse_sim_mode(pr_mode);
      args.output_dir = pr_out;
      cmd_predict(args, std::cout);
    } else if (run->parsed()) {
      cmd_run(RunConfig::load(run_config), std::cout);
    } else if (synth->parsed()) {
      spec.input_profile = parse_input_profile(sy_profile);
      if (!sy_theta.empty()) {
        spec.theta_true = LinearParams(parse_double_list(sy_theta));
      } else {
        PhysicalParams p = default_synth_physical(sy_degree);
        if (sy_rt) p.r_t = *sy_rt;
        if (sy_ct) p.c_t = *sy_ct;
        if (!sy_eta.empty()) p.eta = Polynomial(parse_double_list(sy_eta));
        spec.theta_true = params_to_linear(PhysicalParams(p.r_t, p.c_t, p.eta), spec.dt);
      }
      SynthArgs args{spec, sy_out, sy_fixture, sy_map};
      cmd_synth(args, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << '\n';
    return exit_code(ErrorKind::Io);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
