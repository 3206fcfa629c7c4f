#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfrs/design.hpp"
#include "cfrs/model.hpp"
#include "cfrs/optimizer.hpp"
#include "cfrs/rng.hpp"
#include "cfrs/scheme.hpp"

namespace cfrs {

enum class SchemeVariant { kSdma, kNoma, kRsmaSingle, kRsmaFull };
enum class DesignMode { kRobust, kNonRobust };

std::string variant_name(SchemeVariant variant);
std::string mode_name(DesignMode mode);
std::optional<SchemeVariant> parse_variant(const std::string& name);
std::optional<DesignMode> parse_mode(const std::string& name);

struct McEstimate {
  Eigen::VectorXd ue_rate;
  Eigen::VectorXd ue_stderr;
  double min_rate = 0.0;
  double min_rate_stderr = 0.0;
};

// Sample-average oracle of the schemes' instantaneous rates over n_samples
// error draws e ~ CN(0, diag(z)). Per-UE rates use the scheme's min/sum
// structure; RSMA additionally needs the operating allocation, which is
// clipped to the Monte Carlo budgets.
McEstimate mc_expected_rates(const BeamDesign& design, const ChannelSet& channels,
                             const SchemeSpec& spec, double noise_power,
                             int n_samples, RandomStream& rng,
                             const RateAllocation* allocation = nullptr);

// Per-UE rates of `allocation` made valid under the closed-form bounds at
// `design` evaluated with `channels` (used to restate a non-robust design's
// claim under the true error statistics).
Eigen::VectorXd allocation_under_bounds(const SchemeSpec& spec,
                                        const BeamDesign& design,
                                        const ChannelSet& channels,
                                        double noise_power,
                                        const RateAllocation& allocation);

struct RateReport {
  std::string scheme;
  std::string mode;
  std::uint64_t master_seed = 0;
  int drop_index = 0;
  int num_aps = 0;
  int num_ues = 0;
  double rho_z = 0.0;

  double mm_objective = 0.0;  // relaxed (pre-projection) bound max-min
  std::vector<double> mm_history;
  int mm_iterations = 0;
  bool mm_converged = false;
  std::string status = "ok";

  std::vector<double> bound_rates;  // per UE, valid under true error stats
  double min_rate_bound = 0.0;
  std::vector<double> mc_rates;
  std::vector<double> mc_stderr;
  double min_rate_mc = 0.0;
  double min_rate_mc_stderr = 0.0;
  int mc_samples = 0;

  RateAllocation allocation;  // operating (design-time) allocation
  std::vector<std::vector<int>> subsets;
  std::vector<int> noma_order;
  std::vector<double> per_ap_power;
  std::vector<double> quant_noise;
  bool power_ok = false;
  bool fronthaul_ok = false;

  nlohmann::json to_json() const;
};

/**
 * One drop end to end: sample topology and channels, design each requested
 * scheme (RSMA variants warm-started through the SDMA -> RSMA(L=1) ->
 * RSMA(L=K-1) chain), project to rank-1 beams, allocate rates, and validate
 * with the Monte Carlo oracle under the true error statistics.
 *
 * Seeds derive only from (master_seed, drop_index), so every variant and
 * mode sees identical channels and identical Monte Carlo draws.
 */
class DropRunner {
 public:
  DropRunner(const SystemConfig& cfg, DesignMode mode, std::uint64_t master_seed,
             int drop_index, int n_samples, const SolverSettings& solver);

  RateReport report(SchemeVariant variant);

  const ChannelSet& channels() const { return channels_; }
  // Final relaxed design of a scheme in the chain (for tests).
  const MmState& state(SchemeVariant variant);

 private:
  MmState& ensure_state(SchemeVariant variant);
  SchemeSpec spec_for(SchemeVariant variant);

  SystemConfig cfg_;
  DesignMode mode_;
  std::uint64_t master_seed_;
  int drop_index_;
  int n_samples_;
  SolverSettings solver_;
  ChannelSet channels_;         // true error statistics
  ChannelSet design_channels_;  // z zeroed for the non-robust mode
  std::optional<SchemeSpec> clustered_;
  std::optional<MmState> states_[4];
  std::optional<SchemeSpec> specs_[4];
};

// Convenience single-drop entry point.
struct DropSpec {
  SystemConfig cfg;
  SchemeVariant variant = SchemeVariant::kRsmaFull;
  DesignMode mode = DesignMode::kRobust;
  std::uint64_t master_seed = 1;
  int drop_index = 0;
  int n_samples = 10000;
  SolverSettings solver;
};
RateReport run_drop(const DropSpec& spec);

struct PairedComparison {
  std::vector<double> robust_min_rate;     // MC, per successful drop
  std::vector<double> nonrobust_min_rate;  // MC, paired
  double mean_robust = 0.0;
  double mean_nonrobust = 0.0;
  double mean_gap = 0.0;
  double gap_stderr = 0.0;
  int drops = 0;
  int failures = 0;
};

// Fig.-2 style paired comparison: per drop, design once robust and once with
// z forced to zero, evaluate both with the oracle under the true statistics.
PairedComparison compare_robust_nonrobust(const SystemConfig& cfg,
                                          SchemeVariant variant, int drops,
                                          std::uint64_t seed, int n_samples,
                                          const SolverSettings& solver,
                                          int threads = 1);

struct SchemeComparison {
  std::vector<SchemeVariant> variants;
  // [variant][drop]
  std::vector<std::vector<double>> bound_min_rate;  // mm objective
  std::vector<std::vector<double>> mc_min_rate;
  std::vector<double> mean_bound;
  std::vector<double> mean_mc;
  int drops = 0;
  int failures = 0;
};

// All four scheme variants on identical drops (robust designs).
SchemeComparison compare_schemes(const SystemConfig& cfg, int drops,
                                 std::uint64_t seed, int n_samples,
                                 const SolverSettings& solver, int threads = 1);

}  // namespace cfrs
