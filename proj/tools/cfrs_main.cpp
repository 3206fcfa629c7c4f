#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfrs/evaluation.hpp"
#include "cfrs/experiments.hpp"

namespace {

// Accepts either a bare SystemConfig object or a document with a "system"
// section (plus optional "solver" and "n_samples").
struct SingleConfig {
  cfrs::SystemConfig system;
  cfrs::SolverSettings solver;
  int n_samples = 10000;
};

SingleConfig parse_single_config(const nlohmann::json& j) {
  SingleConfig cfg;
  const nlohmann::json& system = j.contains("system") ? j["system"] : j;
  cfg.system = cfrs::system_config_from_json(system);
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    cfg.solver.epsilon = s.value("epsilon", cfg.solver.epsilon);
    cfg.solver.max_iters = s.value("max_iters", cfg.solver.max_iters);
    cfg.solver.subproblem_gap = s.value("subproblem_gap", cfg.solver.subproblem_gap);
  }
  cfg.n_samples = j.value("n_samples", cfg.n_samples);
  return cfg;
}

int run_single_command(const std::string& config_path, const std::string& scheme,
                       const std::string& mode, std::uint64_t seed, bool seed_given,
                       int n_samples, bool samples_given, const std::string& out_dir,
                       bool trace) {
  const auto variant = cfrs::parse_variant(scheme);
  if (!variant) {
    std::cerr << "error: unknown scheme '" << scheme
              << "' (expected sdma, noma, rsma1, rsma_full)\n";
    return 1;
  }
  const auto design_mode = cfrs::parse_mode(mode);
  if (!design_mode) {
    std::cerr << "error: unknown mode '" << mode << "' (expected robust, nonrobust)\n";
    return 1;
  }
  SingleConfig cfg;
  try {
    cfg = parse_single_config(cfrs::load_json_file(config_path));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  cfg.solver.trace = trace;
  const std::uint64_t master_seed = seed_given ? seed : cfg.system.seed;
  const int samples = samples_given ? n_samples : cfg.n_samples;

  try {
    const cfrs::RateReport report = cfrs::run_single(
        cfg.system, *variant, *design_mode, master_seed, samples, cfg.solver);
    const std::string serialized = report.to_json().dump(2);
    std::cout << serialized << '\n';
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      std::ofstream out(std::filesystem::path(out_dir) / "report.json");
      out << serialized << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: drop failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell-free downlink multiple-access designer (SDMA/NOMA/RSMA) "
               "with fronthaul quantization and imperfect CSI"};
  app.require_subcommand(1);

  // single
  auto* single = app.add_subcommand("single", "Design and validate one drop");
  std::string single_config;
  std::string scheme = "rsma_full";
  std::string mode = "robust";
  std::uint64_t seed = 0;
  int n_samples = 10000;
  std::string out_dir;
  bool trace = false;
  single->add_option("--config", single_config, "JSON config file")->required();
  single->add_option("--scheme", scheme, "sdma | noma | rsma1 | rsma_full");
  single->add_option("--mode", mode, "robust | nonrobust");
  auto* seed_opt = single->add_option("--seed", seed, "master seed (overrides config)");
  auto* samples_opt =
      single->add_option("--samples", n_samples, "Monte Carlo samples per expectation");
  single->add_option("--out", out_dir, "directory for report.json");
  single->add_flag("--trace", trace, "per-iteration solver trace on stderr");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a sweep grid and write CSV/JSONL");
  std::string sweep_config;
  std::uint64_t sweep_seed = 0;
  int sweep_drops = 0;
  std::string sweep_out;
  int sweep_threads = 0;
  bool sweep_trace = false;
  sweep->add_option("--config", sweep_config, "JSON sweep file")->required();
  auto* sweep_seed_opt =
      sweep->add_option("--seed", sweep_seed, "master seed (overrides config)");
  auto* sweep_drops_opt =
      sweep->add_option("--drops", sweep_drops, "drops per sweep point (overrides config)");
  auto* sweep_out_opt =
      sweep->add_option("--out", sweep_out, "output directory (overrides config)");
  sweep->add_option("--threads", sweep_threads, "worker threads (0 = auto)");
  sweep->add_flag("--trace", sweep_trace, "write trace.log with MM iteration lines");

  // validate-config
  auto* validate = app.add_subcommand("validate-config", "Parse and check a config file");
  std::string validate_config;
  validate->add_option("--config", validate_config, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  if (single->parsed()) {
    return run_single_command(single_config, scheme, mode, seed, seed_opt->count() > 0,
                              n_samples, samples_opt->count() > 0, out_dir, trace);
  }

  if (sweep->parsed()) {
    cfrs::SweepSpec spec;
    try {
      spec = cfrs::sweep_spec_from_json(cfrs::load_json_file(sweep_config));
      if (sweep_seed_opt->count() > 0) spec.master_seed = sweep_seed;
      if (sweep_drops_opt->count() > 0) spec.drops = sweep_drops;
      if (sweep_out_opt->count() > 0) spec.out_dir = sweep_out;
      if (sweep_threads > 0) spec.threads = sweep_threads;
      spec.trace = sweep_trace;
      spec.validate();
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    try {
      std::cerr << "sweep: " << spec.values.size() << " points x " << spec.schemes.size()
                << " schemes x " << spec.modes.size() << " modes x " << spec.drops
                << " drops -> " << spec.out_dir << '\n';
      const cfrs::SweepResult result = cfrs::run_sweep(spec);
      std::cerr << "sweep: " << result.failed_runs << "/" << result.total_runs
                << " runs failed\n";
      std::cout << result.csv_path.string() << '\n';
      if (!result.success_threshold_met()) {
        std::cerr << "error: drop-failure threshold exceeded (>5% failed)\n";
        return 2;
      }
    } catch (const std::exception& e) {
      std::cerr << "error: sweep failed: " << e.what() << '\n';
      return 1;
    }
    return 0;
  }

  if (validate->parsed()) {
    try {
      const nlohmann::json j = cfrs::load_json_file(validate_config);
      if (j.contains("sweep")) {
        const cfrs::SweepSpec spec = cfrs::sweep_spec_from_json(j);
        std::cout << "ok: sweep over " << cfrs::sweep_variable_name(spec.variable)
                  << " with " << spec.values.size() << " values, " << spec.drops
                  << " drops\n";
      } else {
        parse_single_config(j);
        std::cout << "ok: single-drop config\n";
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    return 0;
  }
  return 0;
}
