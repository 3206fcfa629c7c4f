#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfrs/evaluation.hpp"
#include "cfrs/model.hpp"
#include "cfrs/optimizer.hpp"

namespace cfrs {

enum class SweepVariable { kRhoZ, kNumUes, kNumAps, kSnrDb, kFronthaul };

std::string sweep_variable_name(SweepVariable variable);
std::optional<SweepVariable> parse_sweep_variable(const std::string& name);

// Applies one sweep value to a base config (snr_db keeps noise_power and
// rescales tx_power). Integer variables reject non-integral values.
SystemConfig apply_sweep_value(const SystemConfig& base, SweepVariable variable,
                               double value);

struct SweepSpec {
  SystemConfig base;
  SweepVariable variable = SweepVariable::kRhoZ;
  std::vector<double> values;
  std::vector<SchemeVariant> schemes;
  std::vector<DesignMode> modes;
  int drops = 20;
  int n_samples = 10000;
  std::uint64_t master_seed = 1;
  std::string out_dir = "results";
  SolverSettings solver;
  int threads = 0;  // 0 = hardware concurrency (capped)
  bool trace = false;

  void validate() const;  // throws std::invalid_argument
};

// JSON (de)serialization. SystemConfig accepts either explicit tx_power /
// noise_power or the "snr_db" shorthand (noise_power = 1).
SystemConfig system_config_from_json(const nlohmann::json& j);
nlohmann::json system_config_to_json(const SystemConfig& cfg);
SweepSpec sweep_spec_from_json(const nlohmann::json& j);

// Parses a config file; throws std::invalid_argument with the file name and
// a diagnostic on failure.
nlohmann::json load_json_file(const std::string& path);

struct SweepSummaryRow {
  double sweep_value = 0.0;
  std::string scheme;
  std::string mode;
  double mean_min_rate_bound = 0.0;
  double mean_min_rate_mc = 0.0;
  double stderr_mc = 0.0;  // across-drop standard error of the MC min-rate
  int drops = 0;
  int failures = 0;
};

struct SweepResult {
  std::vector<SweepSummaryRow> rows;
  int total_runs = 0;
  int failed_runs = 0;
  std::filesystem::path csv_path;
  std::filesystem::path jsonl_path;

  // A sweep is acceptable when at least 95% of runs succeeded.
  bool success_threshold_met() const {
    return failed_runs * 20 <= total_runs;
  }
};

// Runs the full sweep grid (value x scheme x mode x drop), writes
// results.csv and reports.jsonl (and trace.log when enabled) under
// spec.out_dir, and returns the summary.
SweepResult run_sweep(const SweepSpec& spec);

// One drop, printed report: library entry point behind `cfrs single`.
RateReport run_single(const SystemConfig& cfg, SchemeVariant variant,
                      DesignMode mode, std::uint64_t seed, int n_samples,
                      const SolverSettings& solver);

}  // namespace cfrs
