#include "cfrs/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cfrs/parallel.hpp"

namespace cfrs {

std::string sweep_variable_name(SweepVariable variable) {
  switch (variable) {
    case SweepVariable::kRhoZ:
      return "rho_z";
    case SweepVariable::kNumUes:
      return "K";
    case SweepVariable::kNumAps:
      return "M";
    case SweepVariable::kSnrDb:
      return "snr_db";
    case SweepVariable::kFronthaul:
      return "C_fh";
  }
  return "unknown";
}

std::optional<SweepVariable> parse_sweep_variable(const std::string& name) {
  if (name == "rho_z") return SweepVariable::kRhoZ;
  if (name == "K" || name == "num_ues") return SweepVariable::kNumUes;
  if (name == "M" || name == "num_aps") return SweepVariable::kNumAps;
  if (name == "snr_db") return SweepVariable::kSnrDb;
  if (name == "C_fh" || name == "fronthaul_capacity") return SweepVariable::kFronthaul;
  return std::nullopt;
}

namespace {

int integral_value(double value, const char* what) {
  if (value <= 0.0 || value != std::floor(value)) {
    throw std::invalid_argument(std::string(what) + " sweep values must be positive integers");
  }
  return static_cast<int>(value);
}

}  // namespace

SystemConfig apply_sweep_value(const SystemConfig& base, SweepVariable variable,
                               double value) {
  SystemConfig cfg = base;
  switch (variable) {
    case SweepVariable::kRhoZ:
      cfg.relative_csi_error = value;
      break;
    case SweepVariable::kNumUes:
      cfg.num_ues = integral_value(value, "K");
      break;
    case SweepVariable::kNumAps:
      cfg.num_aps = integral_value(value, "M");
      break;
    case SweepVariable::kSnrDb:
      cfg.tx_power = std::pow(10.0, value / 10.0) * cfg.noise_power;
      break;
    case SweepVariable::kFronthaul:
      cfg.fronthaul_capacity = value;
      break;
  }
  cfg.validate();
  return cfg;
}

void SweepSpec::validate() const {
  base.validate();
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (schemes.empty()) throw std::invalid_argument("sweep needs at least one scheme");
  if (modes.empty()) throw std::invalid_argument("sweep needs at least one mode");
  if (drops < 1) throw std::invalid_argument("drops must be >= 1");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (out_dir.empty()) throw std::invalid_argument("output directory must be set");
  for (double v : values) {
    apply_sweep_value(base, variable, v);  // validates the whole grid up front
  }
}

namespace {

double require_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw std::invalid_argument(std::string("config field '") + key +
                                "' is missing or not a number");
  }
  return j[key].get<double>();
}

}  // namespace

SystemConfig system_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("system config must be an object");
  SystemConfig cfg;
  cfg.num_aps = static_cast<int>(require_number(j, "num_aps"));
  cfg.num_ues = static_cast<int>(require_number(j, "num_ues"));
  cfg.fronthaul_capacity = require_number(j, "fronthaul_capacity");
  if (j.contains("snr_db")) {
    if (j.contains("tx_power")) {
      throw std::invalid_argument("give either snr_db or tx_power, not both");
    }
    cfg.noise_power = j.value("noise_power", 1.0);
    cfg.tx_power = std::pow(10.0, j["snr_db"].get<double>() / 10.0) * cfg.noise_power;
  } else {
    cfg.tx_power = require_number(j, "tx_power");
    cfg.noise_power = j.value("noise_power", 1.0);
  }
  cfg.relative_csi_error = require_number(j, "relative_csi_error");
  cfg.region_radius = j.value("region_radius", 100.0);
  cfg.ref_distance = j.value("ref_distance", 30.0);
  cfg.pathloss_exponent = j.value("pathloss_exponent", 3.0);
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.validate();
  return cfg;
}

nlohmann::json system_config_to_json(const SystemConfig& cfg) {
  nlohmann::json j;
  j["num_aps"] = cfg.num_aps;
  j["num_ues"] = cfg.num_ues;
  j["fronthaul_capacity"] = cfg.fronthaul_capacity;
  j["tx_power"] = cfg.tx_power;
  j["noise_power"] = cfg.noise_power;
  j["relative_csi_error"] = cfg.relative_csi_error;
  j["region_radius"] = cfg.region_radius;
  j["ref_distance"] = cfg.ref_distance;
  j["pathloss_exponent"] = cfg.pathloss_exponent;
  j["seed"] = cfg.seed;
  return j;
}

namespace {

SolverSettings solver_from_json(const nlohmann::json& j) {
  SolverSettings settings;
  if (!j.is_object()) return settings;
  settings.epsilon = j.value("epsilon", settings.epsilon);
  settings.max_iters = j.value("max_iters", settings.max_iters);
  settings.subproblem_gap = j.value("subproblem_gap", settings.subproblem_gap);
  settings.feasibility_tolerance =
      j.value("feasibility_tolerance", settings.feasibility_tolerance);
  return settings;
}

}  // namespace

SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("sweep config must be an object");
  if (!j.contains("system")) {
    throw std::invalid_argument("sweep config needs a 'system' section");
  }
  SweepSpec spec;
  spec.base = system_config_from_json(j["system"]);
  if (!j.contains("sweep") || !j["sweep"].is_object()) {
    throw std::invalid_argument("sweep config needs a 'sweep' section");
  }
  const auto& sweep = j["sweep"];
  const std::string variable = sweep.value("variable", "");
  const auto parsed = parse_sweep_variable(variable);
  if (!parsed) {
    throw std::invalid_argument("unknown sweep variable '" + variable +
                                "' (rho_z, K, M, snr_db, C_fh)");
  }
  spec.variable = *parsed;
  if (!sweep.contains("values") || !sweep["values"].is_array()) {
    throw std::invalid_argument("sweep.values must be an array");
  }
  spec.values = sweep["values"].get<std::vector<double>>();

  if (!j.contains("schemes") || !j["schemes"].is_array()) {
    throw std::invalid_argument("sweep config needs a 'schemes' array");
  }
  for (const auto& name : j["schemes"]) {
    const auto v = parse_variant(name.get<std::string>());
    if (!v) {
      throw std::invalid_argument("unknown scheme '" + name.get<std::string>() +
                                  "' (sdma, noma, rsma1, rsma_full)");
    }
    spec.schemes.push_back(*v);
  }
  if (j.contains("modes")) {
    for (const auto& name : j["modes"]) {
      const auto m = parse_mode(name.get<std::string>());
      if (!m) {
        throw std::invalid_argument("unknown mode '" + name.get<std::string>() +
                                    "' (robust, nonrobust)");
      }
      spec.modes.push_back(*m);
    }
  } else {
    spec.modes = {DesignMode::kRobust};
  }
  spec.drops = j.value("drops", spec.drops);
  spec.n_samples = j.value("n_samples", spec.n_samples);
  spec.master_seed = j.value("seed", spec.base.seed);
  spec.out_dir = j.value("out", spec.out_dir);
  spec.threads = j.value("threads", spec.threads);
  if (j.contains("solver")) spec.solver = solver_from_json(j["solver"]);
  spec.validate();
  return spec;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

namespace {

struct SweepTask {
  int value_index;
  int scheme_index;
  int mode_index;
  int drop;
};

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return buffer;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(spec.out_dir);

  int threads = spec.threads;
  if (threads <= 0) {
    threads = std::min(8u, std::max(1u, std::thread::hardware_concurrency()));
  }

  std::ofstream trace_file;
  std::mutex trace_mutex;
  SolverSettings solver = spec.solver;
  if (spec.trace) {
    trace_file.open(fs::path(spec.out_dir) / "trace.log");
    solver.trace_sink = [&](const std::string& line) {
      std::lock_guard<std::mutex> guard(trace_mutex);
      trace_file << line << '\n';
    };
  }

  // Flatten the grid; drops are the unit of work.
  std::vector<SweepTask> tasks;
  for (int vi = 0; vi < static_cast<int>(spec.values.size()); ++vi) {
    for (int si = 0; si < static_cast<int>(spec.schemes.size()); ++si) {
      for (int mi = 0; mi < static_cast<int>(spec.modes.size()); ++mi) {
        for (int d = 0; d < spec.drops; ++d) {
          tasks.push_back({vi, si, mi, d});
        }
      }
    }
  }

  struct TaskOutcome {
    bool ok = false;
    RateReport report;
    std::string error;
  };
  std::vector<TaskOutcome> outcomes(tasks.size());

  parallel_for(static_cast<int>(tasks.size()), threads, [&](int i) {
    const SweepTask& task = tasks[i];
    TaskOutcome& outcome = outcomes[i];
    try {
      const SystemConfig cfg =
          apply_sweep_value(spec.base, spec.variable, spec.values[task.value_index]);
      DropRunner runner(cfg, spec.modes[task.mode_index], spec.master_seed, task.drop,
                        spec.n_samples, solver);
      outcome.report = runner.report(spec.schemes[task.scheme_index]);
      outcome.ok = true;
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
  });

  SweepResult result;
  result.total_runs = static_cast<int>(tasks.size());
  result.csv_path = fs::path(spec.out_dir) / "results.csv";
  result.jsonl_path = fs::path(spec.out_dir) / "reports.jsonl";

  // Single writer, deterministic order: reports.jsonl in task order.
  std::ofstream jsonl(result.jsonl_path);
  if (!jsonl) throw std::runtime_error("cannot write " + result.jsonl_path.string());
  for (size_t i = 0; i < tasks.size(); ++i) {
    const SweepTask& task = tasks[i];
    nlohmann::json line;
    line["sweep_variable"] = sweep_variable_name(spec.variable);
    line["sweep_value"] = spec.values[task.value_index];
    line["drop"] = task.drop;
    if (outcomes[i].ok) {
      line["report"] = outcomes[i].report.to_json();
    } else {
      line["error"] = outcomes[i].error;
      line["scheme"] = variant_name(spec.schemes[task.scheme_index]);
      line["mode"] = mode_name(spec.modes[task.mode_index]);
    }
    jsonl << line.dump() << '\n';
  }

  std::ofstream csv(result.csv_path);
  if (!csv) throw std::runtime_error("cannot write " + result.csv_path.string());
  csv << "sweep_variable,sweep_value,scheme,mode,mean_min_rate_bound,"
         "mean_min_rate_mc,stderr_mc,drops,failures\n";

  size_t cursor = 0;
  for (int vi = 0; vi < static_cast<int>(spec.values.size()); ++vi) {
    for (int si = 0; si < static_cast<int>(spec.schemes.size()); ++si) {
      for (int mi = 0; mi < static_cast<int>(spec.modes.size()); ++mi) {
        SweepSummaryRow row;
        row.sweep_value = spec.values[vi];
        row.scheme = variant_name(spec.schemes[si]);
        row.mode = mode_name(spec.modes[mi]);
        row.drops = spec.drops;
        double sum_bound = 0.0;
        double sum_mc = 0.0;
        double sum_mc_sq = 0.0;
        int ok = 0;
        for (int d = 0; d < spec.drops; ++d, ++cursor) {
          const TaskOutcome& outcome = outcomes[cursor];
          if (!outcome.ok) {
            ++row.failures;
            ++result.failed_runs;
            continue;
          }
          ++ok;
          sum_bound += outcome.report.min_rate_bound;
          sum_mc += outcome.report.min_rate_mc;
          sum_mc_sq += outcome.report.min_rate_mc * outcome.report.min_rate_mc;
        }
        if (ok > 0) {
          row.mean_min_rate_bound = sum_bound / ok;
          row.mean_min_rate_mc = sum_mc / ok;
          if (ok > 1) {
            const double var = (sum_mc_sq - sum_mc * sum_mc / ok) / (ok - 1);
            row.stderr_mc = std::sqrt(std::max(var, 0.0) / ok);
          }
        }
        csv << sweep_variable_name(spec.variable) << ',' << format_double(row.sweep_value)
            << ',' << row.scheme << ',' << row.mode << ','
            << format_double(row.mean_min_rate_bound) << ','
            << format_double(row.mean_min_rate_mc) << ',' << format_double(row.stderr_mc)
            << ',' << row.drops << ',' << row.failures << '\n';
        result.rows.push_back(std::move(row));
      }
    }
  }
  return result;
}

RateReport run_single(const SystemConfig& cfg, SchemeVariant variant,
                      DesignMode mode, std::uint64_t seed, int n_samples,
                      const SolverSettings& solver) {
  DropSpec spec;
  spec.cfg = cfg;
  spec.variant = variant;
  spec.mode = mode;
  spec.master_seed = seed;
  spec.drop_index = 0;
  spec.n_samples = n_samples;
  spec.solver = solver;
  return run_drop(spec);
}

}  // namespace cfrs
