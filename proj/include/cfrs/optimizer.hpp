#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "cfrs/design.hpp"
#include "cfrs/model.hpp"
#include "cfrs/scheme.hpp"

namespace cfrs {

struct SolverSettings {
  double epsilon = 1e-4;             // MM stop: |R_min gain| <= epsilon
  int max_iters = 100;               // MM iterations
  double subproblem_gap = 1e-9;      // barrier duality-gap target
  double feasibility_tolerance = 1e-7;
  bool trace = false;                // per-iteration lines to stderr
  // Optional extra sink for trace lines (e.g. a log file); called in
  // addition to stderr when trace is enabled.
  std::function<void(const std::string&)> trace_sink;
};

struct RateAllocation {
  // SDMA/NOMA: the full per-UE rate. RSMA: the private part.
  Eigen::VectorXd private_rates;
  // RSMA: per subset, rates aligned with SchemeSpec::subsets[l] member order.
  std::vector<Eigen::VectorXd> common_rates;
  Eigen::VectorXd ue_totals;
  double min_rate = 0.0;
};

struct MmState {
  BeamDesign design;
  RateAllocation rates;
  double objective = 0.0;           // true-bound max-min value at `design`
  std::vector<double> history;      // objective per iterate, history[0] = init
  int iterations = 0;               // number of entries in history
  bool converged = false;
  std::string status = "ok";
  int total_newton_steps = 0;
};

// Algorithm-1 initialization: matched-filter covariances scaled so the most
// loaded AP transmits P_tx/(1+beta) signal power, omega at the fronthaul
// floor. Falls back to identity covariances if all estimated channels vanish.
BeamDesign init_design(const SchemeSpec& spec, const ChannelSet& channels,
                       const SystemConfig& cfg);

// UEs sorted by ascending estimated channel gain, ties by index.
std::vector<int> noma_decoding_order(const ChannelSet& channels);

// Max-min rate allocation at a fixed design under the true closed-form
// bounds. SDMA/NOMA: direct evaluation. RSMA: small LP solved with the
// barrier backend.
RateAllocation allocate_rates(const SchemeSpec& spec, const BeamDesign& design,
                              const ChannelSet& channels, double noise_power);

// MM loop (Algorithm 1): linearize at the incumbent, solve the convex
// subproblem, adopt the new design if it improves the true-bound objective.
// `warm_start` overrides init_design (it must be feasible for the scheme).
MmState mm_optimize(const SchemeSpec& spec, const ChannelSet& channels,
                    const SystemConfig& cfg, const SolverSettings& settings,
                    const BeamDesign* warm_start = nullptr);

struct ProjectedDesign {
  std::vector<Eigen::VectorXcd> beams;  // v_s = sqrt(lambda_1) u_1 per stream
  BeamDesign design;                    // rank-1 covariances, omega re-tightened
};

// Principal-eigenpair projection. Per-AP powers never increase; omega is
// reduced to beta * (new signal power). Throws if a covariance is not PSD
// within tolerance.
ProjectedDesign rank1_project(const BeamDesign& design, double beta);

}  // namespace cfrs
