#include "cfrs/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cfrs/bounds.hpp"
#include "cfrs/clustering.hpp"
#include "cfrs/parallel.hpp"

namespace cfrs {

namespace {
constexpr double kLn2 = 0.6931471805599453;
}

std::string variant_name(SchemeVariant variant) {
  switch (variant) {
    case SchemeVariant::kSdma:
      return "sdma";
    case SchemeVariant::kNoma:
      return "noma";
    case SchemeVariant::kRsmaSingle:
      return "rsma1";
    case SchemeVariant::kRsmaFull:
      return "rsma_full";
  }
  return "unknown";
}

std::string mode_name(DesignMode mode) {
  return mode == DesignMode::kRobust ? "robust" : "nonrobust";
}

std::optional<SchemeVariant> parse_variant(const std::string& name) {
  if (name == "sdma") return SchemeVariant::kSdma;
  if (name == "noma") return SchemeVariant::kNoma;
  if (name == "rsma1") return SchemeVariant::kRsmaSingle;
  if (name == "rsma_full") return SchemeVariant::kRsmaFull;
  return std::nullopt;
}

std::optional<DesignMode> parse_mode(const std::string& name) {
  if (name == "robust") return DesignMode::kRobust;
  if (name == "nonrobust") return DesignMode::kNonRobust;
  return std::nullopt;
}

namespace {

struct TermStats {
  std::vector<double> mean;
  std::vector<double> stderr_;
};

// Sample means and standard errors of log2(1 + gamma) per rate term.
TermStats estimate_terms(const std::vector<RateTerm>& terms, const BeamDesign& design,
                         const ChannelSet& channels, double noise_power,
                         int n_samples, RandomStream& rng) {
  const int K = channels.num_ues();
  const int M = channels.num_aps();
  std::vector<std::vector<int>> by_ue(K);
  for (size_t t = 0; t < terms.size(); ++t) {
    by_ue[terms[t].channel_ue].push_back(static_cast<int>(t));
  }

  TermStats stats;
  stats.mean.assign(terms.size(), 0.0);
  stats.stderr_.assign(terms.size(), 0.0);
  std::vector<double> m2(terms.size(), 0.0);

  Eigen::VectorXcd error(M);
  // One error-draw sequence per UE, shared by all of its terms, so an
  // identical stream gives identical draws across schemes.
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXcd h_hat = channels.estimated_row(k);
    const Eigen::VectorXd z = channels.error_variance_row(k);
    for (int s = 0; s < n_samples; ++s) {
      for (int i = 0; i < M; ++i) error(i) = rng.complex_gaussian(z(i));
      for (int t : by_ue[k]) {
        const double gamma =
            sinr_instant(terms[t], design, h_hat, error, noise_power);
        const double x = std::log1p(gamma) / kLn2;
        const double delta = x - stats.mean[t];
        stats.mean[t] += delta / (s + 1);
        m2[t] += delta * (x - stats.mean[t]);
      }
    }
  }
  for (size_t t = 0; t < terms.size(); ++t) {
    stats.stderr_[t] =
        n_samples > 1 ? std::sqrt(m2[t] / (n_samples - 1) / n_samples) : 0.0;
  }
  return stats;
}

// Per-UE totals of an RSMA allocation clipped to given budgets: private parts
// capped individually, common sums scaled down to their subset budget.
void clip_rsma_allocation(const SchemeSpec& spec, const RateAllocation& allocation,
                          const Eigen::VectorXd& private_caps,
                          const Eigen::VectorXd& common_caps,
                          Eigen::VectorXd* ue_rate) {
  const int K = spec.num_ues;
  const int L = spec.num_common();
  ue_rate->resize(K);
  for (int k = 0; k < K; ++k) {
    (*ue_rate)[k] = std::min(allocation.private_rates[k], private_caps[k]);
  }
  for (int l = 0; l < L; ++l) {
    const double total = allocation.common_rates[l].sum();
    const double factor =
        (total > common_caps[l] && total > 0.0) ? common_caps[l] / total : 1.0;
    for (size_t m = 0; m < spec.subsets[l].size(); ++m) {
      (*ue_rate)[spec.subsets[l][m]] += factor * allocation.common_rates[l][m];
    }
  }
}

}  // namespace

McEstimate mc_expected_rates(const BeamDesign& design, const ChannelSet& channels,
                             const SchemeSpec& spec, double noise_power,
                             int n_samples, RandomStream& rng,
                             const RateAllocation* allocation) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  spec.validate();
  const int K = spec.num_ues;
  const auto terms = rate_terms(spec);
  const TermStats stats =
      estimate_terms(terms, design, channels, noise_power, n_samples, rng);

  McEstimate mc;
  mc.ue_rate = Eigen::VectorXd::Zero(K);
  mc.ue_stderr = Eigen::VectorXd::Zero(K);

  switch (spec.kind) {
    case SchemeSpec::Kind::kSdma: {
      for (int k = 0; k < K; ++k) {
        mc.ue_rate[k] = stats.mean[k];
        mc.ue_stderr[k] = stats.stderr_[k];
      }
      break;
    }
    case SchemeSpec::Kind::kNoma: {
      int index = 0;
      for (int k = 0; k < K; ++k) {
        int best = index;
        for (int l = k; l < K; ++l, ++index) {
          if (stats.mean[index] < stats.mean[best]) best = index;
        }
        mc.ue_rate[spec.noma_order[k]] = stats.mean[best];
        mc.ue_stderr[spec.noma_order[k]] = stats.stderr_[best];
      }
      break;
    }
    case SchemeSpec::Kind::kRsma: {
      const int L = spec.num_common();
      if (L == 0) {
        // Degenerate single-layer case: only the private terms exist.
        for (int k = 0; k < K; ++k) {
          mc.ue_rate[k] = stats.mean[k];
          mc.ue_stderr[k] = stats.stderr_[k];
        }
        break;
      }
      if (allocation == nullptr) {
        throw std::invalid_argument("RSMA Monte Carlo evaluation needs the allocation");
      }
      Eigen::VectorXd budgets(L);
      Eigen::VectorXd budget_stderr(L);
      int index = 0;
      for (int l = 0; l < L; ++l) {
        int best = index;
        for (size_t m = 0; m < spec.subsets[l].size(); ++m, ++index) {
          if (stats.mean[index] < stats.mean[best]) best = index;
        }
        budgets[l] = stats.mean[best];
        budget_stderr[l] = stats.stderr_[best];
      }
      Eigen::VectorXd private_mean(K);
      Eigen::VectorXd private_stderr(K);
      for (int k = 0; k < K; ++k) {
        private_mean[k] = stats.mean[index + k];
        private_stderr[k] = stats.stderr_[index + k];
      }
      clip_rsma_allocation(spec, *allocation, private_mean, budgets, &mc.ue_rate);
      for (int k = 0; k < K; ++k) {
        double var = private_stderr[k] * private_stderr[k];
        for (int l = 0; l < L; ++l) {
          if (spec.subset_contains(l, k)) var += budget_stderr[l] * budget_stderr[l];
        }
        mc.ue_stderr[k] = std::sqrt(var);
      }
      break;
    }
  }

  int argmin = 0;
  mc.min_rate = mc.ue_rate.minCoeff(&argmin);
  mc.min_rate_stderr = mc.ue_stderr[argmin];
  return mc;
}

Eigen::VectorXd allocation_under_bounds(const SchemeSpec& spec,
                                        const BeamDesign& design,
                                        const ChannelSet& channels,
                                        double noise_power,
                                        const RateAllocation& allocation) {
  const int K = spec.num_ues;
  if (spec.kind != SchemeSpec::Kind::kRsma || spec.num_common() == 0) {
    // Single layer: the achieved bound is the closed form itself.
    return allocate_rates(spec, design, channels, noise_power).ue_totals;
  }
  const int L = spec.num_common();
  Eigen::VectorXd private_caps(K);
  for (int k = 0; k < K; ++k) {
    private_caps[k] = rsma_private_lb(k, design, channels, spec, noise_power);
  }
  Eigen::VectorXd common_caps(L);
  for (int l = 0; l < L; ++l) {
    double worst = std::numeric_limits<double>::infinity();
    for (int member : spec.subsets[l]) {
      worst = std::min(worst,
                       rsma_common_lb(member, l, design, channels, spec, noise_power));
    }
    common_caps[l] = worst;
  }
  Eigen::VectorXd ue_rate;
  clip_rsma_allocation(spec, allocation, private_caps, common_caps, &ue_rate);
  return ue_rate;
}

nlohmann::json RateReport::to_json() const {
  nlohmann::json j;
  j["scheme"] = scheme;
  j["mode"] = mode;
  j["master_seed"] = master_seed;
  j["drop_index"] = drop_index;
  j["num_aps"] = num_aps;
  j["num_ues"] = num_ues;
  j["rho_z"] = rho_z;
  j["mm_objective"] = mm_objective;
  j["mm_history"] = mm_history;
  j["mm_iterations"] = mm_iterations;
  j["mm_converged"] = mm_converged;
  j["status"] = status;
  j["bound_rates"] = bound_rates;
  j["min_rate_bound"] = min_rate_bound;
  j["mc_rates"] = mc_rates;
  j["mc_stderr"] = mc_stderr;
  j["min_rate_mc"] = min_rate_mc;
  j["min_rate_mc_stderr"] = min_rate_mc_stderr;
  j["mc_samples"] = mc_samples;
  nlohmann::json alloc;
  alloc["private"] =
      std::vector<double>(allocation.private_rates.data(),
                          allocation.private_rates.data() + allocation.private_rates.size());
  nlohmann::json commons = nlohmann::json::array();
  for (const auto& c : allocation.common_rates) {
    commons.push_back(std::vector<double>(c.data(), c.data() + c.size()));
  }
  alloc["common"] = commons;
  j["allocation"] = alloc;
  j["subsets"] = subsets;
  j["noma_order"] = noma_order;
  j["per_ap_power"] = per_ap_power;
  j["quant_noise"] = quant_noise;
  j["power_ok"] = power_ok;
  j["fronthaul_ok"] = fronthaul_ok;
  return j;
}

DropRunner::DropRunner(const SystemConfig& cfg, DesignMode mode,
                       std::uint64_t master_seed, int drop_index, int n_samples,
                       const SolverSettings& solver)
    : cfg_(cfg),
      mode_(mode),
      master_seed_(master_seed),
      drop_index_(drop_index),
      n_samples_(n_samples),
      solver_(solver) {
  cfg_.validate();
  RandomStream drop_stream = RandomStream(master_seed).split(drop_index);
  RandomStream topo_rng = drop_stream.split(0);
  RandomStream chan_rng = drop_stream.split(1);
  const Topology topology = sample_topology(cfg_, topo_rng);
  channels_ = sample_channels(topology, cfg_.relative_csi_error, chan_rng);
  design_channels_ =
      mode == DesignMode::kRobust ? channels_ : channels_.with_zero_error();
}

SchemeSpec DropRunner::spec_for(SchemeVariant variant) {
  const int K = cfg_.num_ues;
  switch (variant) {
    case SchemeVariant::kSdma:
      return SchemeSpec::Sdma(K);
    case SchemeVariant::kNoma:
      return SchemeSpec::Noma(K, noma_decoding_order(design_channels_));
    case SchemeVariant::kRsmaSingle:
      return K >= 2 ? SchemeSpec::RsmaSingleCommon(K) : SchemeSpec::Rsma(K, {});
    case SchemeVariant::kRsmaFull:
      if (K < 2) return SchemeSpec::Rsma(K, {});
      if (!clustered_) clustered_ = cluster_subsets(design_channels_);
      return *clustered_;
  }
  throw std::logic_error("unreachable");
}

MmState& DropRunner::ensure_state(SchemeVariant variant) {
  const int idx = static_cast<int>(variant);
  if (states_[idx]) return *states_[idx];
  const SchemeSpec spec = spec_for(variant);
  specs_[idx] = spec;
  const int K = cfg_.num_ues;
  const int M = cfg_.num_aps;

  switch (variant) {
    case SchemeVariant::kSdma:
    case SchemeVariant::kNoma: {
      states_[idx] = mm_optimize(spec, design_channels_, cfg_, solver_);
      break;
    }
    case SchemeVariant::kRsmaSingle: {
      // K = 1 leaves no common signal: the scheme is SDMA and reuses its run.
      const MmState& sdma = ensure_state(SchemeVariant::kSdma);
      if (spec.num_common() == 0) {
        states_[idx] = sdma;
        break;
      }
      // Warm start from the converged SDMA design with a zero common stream.
      BeamDesign warm = BeamDesign::Zero(spec.num_streams(), M);
      for (int k = 0; k < K; ++k) warm.covariances[k] = sdma.design.covariances[k];
      warm.quant_noise = sdma.design.quant_noise;
      states_[idx] = mm_optimize(spec, design_channels_, cfg_, solver_, &warm);
      break;
    }
    case SchemeVariant::kRsmaFull: {
      // Warm start from RSMA(L=1): the shared common stream moves to the
      // clustering's full-UE subset slot (always the last merge).
      const MmState& single = ensure_state(SchemeVariant::kRsmaSingle);
      if (spec.num_common() == 0) {
        states_[idx] = single;
        break;
      }
      BeamDesign warm = BeamDesign::Zero(spec.num_streams(), M);
      for (int k = 0; k < K; ++k) warm.covariances[k] = single.design.covariances[k];
      if (static_cast<int>(spec.subsets.back().size()) != K) {
        throw std::logic_error("clustered subsets must end with the full UE set");
      }
      warm.covariances[K + spec.num_common() - 1] =
          single.design.covariances[single.design.num_streams() - 1];
      warm.quant_noise = single.design.quant_noise;
      states_[idx] = mm_optimize(spec, design_channels_, cfg_, solver_, &warm);
      break;
    }
  }
  return *states_[idx];
}

const MmState& DropRunner::state(SchemeVariant variant) { return ensure_state(variant); }

RateReport DropRunner::report(SchemeVariant variant) {
  const MmState& st = ensure_state(variant);
  const SchemeSpec& spec = *specs_[static_cast<int>(variant)];
  const double beta = beta_from_fronthaul(cfg_.fronthaul_capacity);
  const double sigma2 = cfg_.noise_power;

  const ProjectedDesign projected = rank1_project(st.design, beta);
  const RateAllocation operating =
      allocate_rates(spec, projected.design, design_channels_, sigma2);
  const Eigen::VectorXd bound_rates = allocation_under_bounds(
      spec, projected.design, channels_, sigma2, operating);

  RandomStream mc_rng = RandomStream(master_seed_).split(drop_index_).split(2);
  const McEstimate mc = mc_expected_rates(projected.design, channels_, spec, sigma2,
                                          n_samples_, mc_rng, &operating);

  const FeasibilityReport feasibility =
      check_design(projected.design, cfg_.tx_power, beta);

  RateReport report;
  report.scheme = variant_name(variant);
  report.mode = mode_name(mode_);
  report.master_seed = master_seed_;
  report.drop_index = drop_index_;
  report.num_aps = cfg_.num_aps;
  report.num_ues = cfg_.num_ues;
  report.rho_z = cfg_.relative_csi_error;
  report.mm_objective = st.objective;
  report.mm_history = st.history;
  report.mm_iterations = st.iterations;
  report.mm_converged = st.converged;
  report.status = st.status;
  report.bound_rates.assign(bound_rates.data(), bound_rates.data() + bound_rates.size());
  report.min_rate_bound = bound_rates.minCoeff();
  report.mc_rates.assign(mc.ue_rate.data(), mc.ue_rate.data() + mc.ue_rate.size());
  report.mc_stderr.assign(mc.ue_stderr.data(), mc.ue_stderr.data() + mc.ue_stderr.size());
  report.min_rate_mc = mc.min_rate;
  report.min_rate_mc_stderr = mc.min_rate_stderr;
  report.mc_samples = n_samples_;
  report.allocation = operating;
  if (spec.kind == SchemeSpec::Kind::kRsma) report.subsets = spec.subsets;
  if (spec.kind == SchemeSpec::Kind::kNoma) report.noma_order = spec.noma_order;
  const Eigen::VectorXd power = projected.design.per_ap_power();
  report.per_ap_power.assign(power.data(), power.data() + power.size());
  report.quant_noise.assign(projected.design.quant_noise.data(),
                            projected.design.quant_noise.data() +
                                projected.design.quant_noise.size());
  report.power_ok = feasibility.max_power_violation <= solver_.feasibility_tolerance;
  report.fronthaul_ok =
      feasibility.max_fronthaul_violation <= solver_.feasibility_tolerance;
  return report;
}

RateReport run_drop(const DropSpec& spec) {
  DropRunner runner(spec.cfg, spec.mode, spec.master_seed, spec.drop_index,
                    spec.n_samples, spec.solver);
  return runner.report(spec.variant);
}

PairedComparison compare_robust_nonrobust(const SystemConfig& cfg,
                                          SchemeVariant variant, int drops,
                                          std::uint64_t seed, int n_samples,
                                          const SolverSettings& solver,
                                          int threads) {
  if (drops < 1) throw std::invalid_argument("drops must be >= 1");
  std::vector<double> robust(drops, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> nonrobust(drops, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> failed(drops, false);

  parallel_for(drops, threads, [&](int d) {
    try {
      DropRunner robust_runner(cfg, DesignMode::kRobust, seed, d, n_samples, solver);
      DropRunner nonrobust_runner(cfg, DesignMode::kNonRobust, seed, d, n_samples,
                                  solver);
      robust[d] = robust_runner.report(variant).min_rate_mc;
      nonrobust[d] = nonrobust_runner.report(variant).min_rate_mc;
    } catch (const std::exception&) {
      failed[d] = true;
    }
  });

  PairedComparison out;
  out.drops = drops;
  double gap_sum = 0.0;
  double gap_sq = 0.0;
  for (int d = 0; d < drops; ++d) {
    if (failed[d]) {
      ++out.failures;
      continue;
    }
    out.robust_min_rate.push_back(robust[d]);
    out.nonrobust_min_rate.push_back(nonrobust[d]);
    const double gap = robust[d] - nonrobust[d];
    gap_sum += gap;
    gap_sq += gap * gap;
  }
  const int n = static_cast<int>(out.robust_min_rate.size());
  if (n > 0) {
    out.mean_robust =
        std::accumulate(out.robust_min_rate.begin(), out.robust_min_rate.end(), 0.0) / n;
    out.mean_nonrobust = std::accumulate(out.nonrobust_min_rate.begin(),
                                         out.nonrobust_min_rate.end(), 0.0) /
                         n;
    out.mean_gap = gap_sum / n;
    if (n > 1) {
      const double var = (gap_sq - gap_sum * gap_sum / n) / (n - 1);
      out.gap_stderr = std::sqrt(std::max(var, 0.0) / n);
    }
  }
  return out;
}

SchemeComparison compare_schemes(const SystemConfig& cfg, int drops,
                                 std::uint64_t seed, int n_samples,
                                 const SolverSettings& solver, int threads) {
  if (drops < 1) throw std::invalid_argument("drops must be >= 1");
  SchemeComparison out;
  out.variants = {SchemeVariant::kSdma, SchemeVariant::kNoma,
                  SchemeVariant::kRsmaSingle, SchemeVariant::kRsmaFull};
  const int V = static_cast<int>(out.variants.size());
  out.bound_min_rate.assign(V, std::vector<double>());
  out.mc_min_rate.assign(V, std::vector<double>());
  out.drops = drops;

  std::vector<std::vector<double>> bound(V, std::vector<double>(drops, 0.0));
  std::vector<std::vector<double>> mc(V, std::vector<double>(drops, 0.0));
  std::vector<bool> failed(drops, false);

  parallel_for(drops, threads, [&](int d) {
    try {
      DropRunner runner(cfg, DesignMode::kRobust, seed, d, n_samples, solver);
      for (int v = 0; v < V; ++v) {
        const RateReport report = runner.report(out.variants[v]);
        bound[v][d] = report.mm_objective;
        mc[v][d] = report.min_rate_mc;
      }
    } catch (const std::exception&) {
      failed[d] = true;
    }
  });

  out.mean_bound.assign(V, 0.0);
  out.mean_mc.assign(V, 0.0);
  int ok = 0;
  for (int d = 0; d < drops; ++d) {
    if (failed[d]) {
      ++out.failures;
      continue;
    }
    ++ok;
    for (int v = 0; v < V; ++v) {
      out.bound_min_rate[v].push_back(bound[v][d]);
      out.mc_min_rate[v].push_back(mc[v][d]);
      out.mean_bound[v] += bound[v][d];
      out.mean_mc[v] += mc[v][d];
    }
  }
  if (ok > 0) {
    for (int v = 0; v < V; ++v) {
      out.mean_bound[v] /= ok;
      out.mean_mc[v] /= ok;
    }
  }
  return out;
}

}  // namespace cfrs
