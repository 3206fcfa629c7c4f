#include "cfrs/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cfrs/barrier_solver.hpp"
#include "cfrs/bounds.hpp"
#include "cfrs/subproblem.hpp"

namespace cfrs {

BeamDesign init_design(const SchemeSpec& spec, const ChannelSet& channels,
                       const SystemConfig& cfg) {
  spec.validate();
  cfg.validate();
  const int K = spec.num_ues;
  const int S = spec.num_streams();
  const int M = channels.num_aps();
  const double beta = beta_from_fronthaul(cfg.fronthaul_capacity);

  // Matched-filter direction per stream: sum of unit-norm member channels.
  std::vector<Eigen::VectorXcd> directions(S, Eigen::VectorXcd::Zero(M));
  auto add_unit = [&](Eigen::VectorXcd& g, int ue) {
    const Eigen::VectorXcd h = channels.estimated_row(ue);
    const double norm = h.norm();
    if (norm > 0.0) g += h / norm;
  };
  for (int k = 0; k < K; ++k) add_unit(directions[k], k);
  for (int l = 0; l < spec.num_common(); ++l) {
    for (int member : spec.subsets[l]) add_unit(directions[K + l], member);
  }

  BeamDesign design = BeamDesign::Zero(S, M);
  Eigen::VectorXd total_diag = Eigen::VectorXd::Zero(M);
  for (int s = 0; s < S; ++s) {
    design.covariances[s] = directions[s] * directions[s].adjoint();
    total_diag += design.covariances[s].diagonal().real();
  }

  const double peak = total_diag.maxCoeff();
  if (peak <= 1e-30) {
    // Degenerate: all estimated channels vanish.
    const double tau = cfg.tx_power / ((1.0 + beta) * S);
    for (auto& v : design.covariances) {
      v = tau * Eigen::MatrixXcd::Identity(M, M);
    }
    design.quant_noise.setConstant(beta * S * tau);
    return design;
  }

  const double scale = cfg.tx_power / ((1.0 + beta) * peak);
  for (auto& v : design.covariances) v *= scale;
  design.quant_noise = beta * scale * total_diag;
  return design;
}

std::vector<int> noma_decoding_order(const ChannelSet& channels) {
  const int K = channels.num_ues();
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return channels.estimated.row(a).squaredNorm() <
           channels.estimated.row(b).squaredNorm();
  });
  return order;
}

namespace {

constexpr double kZeroBudget = 1e-12;

RateAllocation allocate_single_layer(const SchemeSpec& spec, const BeamDesign& design,
                                     const ChannelSet& channels, double noise_power) {
  const int K = spec.num_ues;
  RateAllocation alloc;
  alloc.private_rates = Eigen::VectorXd::Zero(K);
  if (spec.kind == SchemeSpec::Kind::kSdma) {
    for (int k = 0; k < K; ++k) {
      alloc.private_rates[k] = sdma_rate_lb(k, design, channels, noise_power);
    }
  } else {
    for (int k = 0; k < K; ++k) {
      double worst = std::numeric_limits<double>::infinity();
      for (int l = k; l < K; ++l) {
        worst = std::min(worst, noma_rate_lb(l, k, design, channels, spec, noise_power));
      }
      alloc.private_rates[spec.noma_order[k]] = worst;
    }
  }
  alloc.ue_totals = alloc.private_rates;
  alloc.min_rate = alloc.ue_totals.minCoeff();
  return alloc;
}

RateAllocation allocate_rsma(const SchemeSpec& spec, const BeamDesign& design,
                             const ChannelSet& channels, double noise_power) {
  const int K = spec.num_ues;
  const int L = spec.num_common();

  Eigen::VectorXd private_budget(K);
  for (int k = 0; k < K; ++k) {
    private_budget[k] = rsma_private_lb(k, design, channels, spec, noise_power);
  }
  Eigen::VectorXd common_budget(L);
  for (int l = 0; l < L; ++l) {
    double worst = std::numeric_limits<double>::infinity();
    for (int member : spec.subsets[l]) {
      worst = std::min(worst,
                       rsma_common_lb(member, l, design, channels, spec, noise_power));
    }
    common_budget[l] = worst;
  }

  // Max-min allocation LP over the barrier backend: variables are the
  // surviving rates plus t, constraints are budgets and per-UE totals.
  ConvexSubproblem lp;
  VariableLayout& layout = lp.layout;
  layout.private_rate_slot.assign(K, -1);
  layout.common_rate_slot.assign(L, {});
  int next = 0;
  for (int k = 0; k < K; ++k) {
    if (private_budget[k] > kZeroBudget) layout.private_rate_slot[k] = next++;
  }
  for (int l = 0; l < L; ++l) {
    layout.common_rate_slot[l].assign(spec.subsets[l].size(), -1);
    if (common_budget[l] > kZeroBudget) {
      for (size_t m = 0; m < spec.subsets[l].size(); ++m) {
        layout.common_rate_slot[l][m] = next++;
      }
    }
  }
  layout.rate_offset = 0;
  layout.num_rate_vars = next;
  layout.t_index = next;
  layout.num_vars = next + 1;

  const int n = layout.num_vars;
  lp.objective = Eigen::VectorXd::Zero(n);
  lp.objective[layout.t_index] = 1.0;

  Eigen::VectorXd start = Eigen::VectorXd::Zero(n);
  for (int slot = 0; slot < layout.num_rate_vars; ++slot) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    row[slot] = -1.0;
    lp.ineq_a.push_back(std::move(row));
    lp.ineq_b.push_back(0.0);
  }
  for (int k = 0; k < K; ++k) {
    if (layout.private_rate_slot[k] < 0) continue;
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    row[layout.private_rate_slot[k]] = 1.0;
    lp.ineq_a.push_back(std::move(row));
    lp.ineq_b.push_back(private_budget[k]);
    start[layout.private_rate_slot[k]] = 0.5 * private_budget[k];
  }
  for (int l = 0; l < L; ++l) {
    if (common_budget[l] <= kZeroBudget) continue;
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    for (int slot : layout.common_rate_slot[l]) {
      row[slot] = 1.0;
      start[slot] = 0.5 * common_budget[l] / spec.subsets[l].size();
    }
    lp.ineq_a.push_back(std::move(row));
    lp.ineq_b.push_back(common_budget[l]);
  }
  double min_total = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    row[layout.t_index] = 1.0;
    double total = 0.0;
    if (layout.private_rate_slot[k] >= 0) {
      row[layout.private_rate_slot[k]] = -1.0;
      total += start[layout.private_rate_slot[k]];
    }
    for (int l = 0; l < L; ++l) {
      if (!spec.subset_contains(l, k) || common_budget[l] <= kZeroBudget) continue;
      const auto& members = spec.subsets[l];
      const auto pos = std::find(members.begin(), members.end(), k) - members.begin();
      row[layout.common_rate_slot[l][pos]] = -1.0;
      total += start[layout.common_rate_slot[l][pos]];
    }
    min_total = std::min(min_total, total);
    lp.ineq_a.push_back(std::move(row));
    lp.ineq_b.push_back(0.0);
  }
  start[layout.t_index] = min_total - 0.5 * (1.0 + std::abs(min_total));

  BarrierSettings settings;
  settings.gap_tolerance = 1e-10;
  const BarrierResult result = barrier_maximize(lp, start, settings);

  RateAllocation alloc;
  alloc.private_rates = Eigen::VectorXd::Zero(K);
  alloc.common_rates.assign(L, Eigen::VectorXd());
  for (int k = 0; k < K; ++k) {
    if (layout.private_rate_slot[k] >= 0) {
      alloc.private_rates[k] = std::max(0.0, result.solution[layout.private_rate_slot[k]]);
    }
  }
  for (int l = 0; l < L; ++l) {
    alloc.common_rates[l] = Eigen::VectorXd::Zero(spec.subsets[l].size());
    for (size_t m = 0; m < spec.subsets[l].size(); ++m) {
      const int slot = layout.common_rate_slot[l][m];
      if (slot >= 0) {
        alloc.common_rates[l][m] = std::max(0.0, result.solution[slot]);
      }
    }
  }
  alloc.ue_totals = alloc.private_rates;
  for (int l = 0; l < L; ++l) {
    for (size_t m = 0; m < spec.subsets[l].size(); ++m) {
      alloc.ue_totals[spec.subsets[l][m]] += alloc.common_rates[l][m];
    }
  }
  alloc.min_rate = alloc.ue_totals.minCoeff();
  return alloc;
}

}  // namespace

RateAllocation allocate_rates(const SchemeSpec& spec, const BeamDesign& design,
                              const ChannelSet& channels, double noise_power) {
  spec.validate();
  if (spec.kind == SchemeSpec::Kind::kRsma && spec.num_common() > 0) {
    return allocate_rsma(spec, design, channels, noise_power);
  }
  if (spec.kind == SchemeSpec::Kind::kRsma) {
    // L = 0 degenerates to SDMA on the private streams.
    RateAllocation alloc =
        allocate_single_layer(SchemeSpec::Sdma(spec.num_ues), design, channels,
                              noise_power);
    return alloc;
  }
  return allocate_single_layer(spec, design, channels, noise_power);
}

MmState mm_optimize(const SchemeSpec& spec, const ChannelSet& channels,
                    const SystemConfig& cfg, const SolverSettings& settings,
                    const BeamDesign* warm_start) {
  spec.validate();
  cfg.validate();
  const double beta = beta_from_fronthaul(cfg.fronthaul_capacity);
  const double sigma2 = cfg.noise_power;

  MmState state;
  state.design = warm_start ? *warm_start : init_design(spec, channels, cfg);
  state.design.symmetrize();
  state.rates = allocate_rates(spec, state.design, channels, sigma2);
  state.objective = state.rates.min_rate;
  state.history.push_back(state.objective);

  auto emit_trace = [&](int iter, double objective, int newton, const std::string& status) {
    if (!settings.trace && !settings.trace_sink) return;
    char line[160];
    std::snprintf(line, sizeof(line),
                  "[mm] scheme=%s iter=%d objective=%.9f newton=%d status=%s",
                  spec.name().c_str(), iter, objective, newton, status.c_str());
    if (settings.trace) std::fprintf(stderr, "%s\n", line);
    if (settings.trace_sink) settings.trace_sink(line);
  };
  emit_trace(1, state.objective, 0, "init");

  BarrierSettings barrier;
  barrier.gap_tolerance = settings.subproblem_gap;

  for (int iter = 2; iter <= settings.max_iters + 1; ++iter) {
    BarrierResult result;
    try {
      const ConvexSubproblem subproblem = build_subproblem(
          spec, channels, cfg.tx_power, sigma2, beta, state.design);
      const Eigen::VectorXd start = initial_point(subproblem, state.design);
      result = barrier_maximize(subproblem, start, barrier);
      state.total_newton_steps += result.newton_steps;

      BeamDesign candidate = design_from_vector(subproblem.layout, result.solution);
      // At fixed covariances the quantization noise only adds interference,
      // so its optimum is the fronthaul floor.
      candidate.quant_noise = beta * candidate.per_ap_signal_power();
      RateAllocation candidate_rates =
          allocate_rates(spec, candidate, channels, sigma2);

      // Extrapolation line search along the accepted covariance direction,
      // on the true bound objective. The DC linearization can contract
      // slowly when the error variances are very uneven; extending the step
      // while it keeps improving preserves monotone ascent and feasibility.
      const int num_streams = candidate.num_streams();
      for (double gamma : {2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
        // Extrapolate, project back onto the PSD cone, rescale into the
        // power budget, and put the quantization noise on the fronthaul
        // floor, so every probe is exactly feasible.
        BeamDesign extended = BeamDesign::Zero(num_streams, candidate.num_aps());
        for (int s = 0; s < num_streams; ++s) {
          const Eigen::MatrixXcd raw =
              state.design.covariances[s] +
              gamma * (candidate.covariances[s] - state.design.covariances[s]);
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(
              0.5 * (raw + raw.adjoint()));
          const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
          extended.covariances[s] = eig.eigenvectors() *
                                    clamped.asDiagonal() *
                                    eig.eigenvectors().adjoint();
        }
        const double peak = (1.0 + beta) * extended.per_ap_signal_power().maxCoeff();
        if (peak > cfg.tx_power) {
          const double shrink = cfg.tx_power / peak;
          for (auto& v : extended.covariances) v *= shrink;
        }
        extended.quant_noise = beta * extended.per_ap_signal_power();
        const RateAllocation extended_rates =
            allocate_rates(spec, extended, channels, sigma2);
        if (extended_rates.min_rate <= candidate_rates.min_rate) break;
        candidate = std::move(extended);
        candidate_rates = extended_rates;
      }

      if (candidate_rates.min_rate >= state.rates.min_rate) {
        state.design = std::move(candidate);
        state.rates = candidate_rates;
        state.objective = candidate_rates.min_rate;
      }
      // else: keep the incumbent; the flat step below terminates the loop.
    } catch (const std::exception& e) {
      state.status = std::string("subproblem failure at iterate ") +
                     std::to_string(iter) + ": " + e.what();
      state.iterations = static_cast<int>(state.history.size());
      emit_trace(iter, state.objective, result.newton_steps, "failed");
      return state;
    }

    state.history.push_back(state.objective);
    emit_trace(iter, state.objective, result.newton_steps, result.status);
    const size_t h = state.history.size();
    if (std::abs(state.history[h - 1] - state.history[h - 2]) <= settings.epsilon) {
      state.converged = true;
      break;
    }
  }
  state.iterations = static_cast<int>(state.history.size());
  if (!state.converged && state.status == "ok") {
    state.status = "max iterations reached";
  }
  return state;
}

ProjectedDesign rank1_project(const BeamDesign& design, double beta) {
  ProjectedDesign projected;
  projected.design = BeamDesign::Zero(design.num_streams(), design.num_aps());
  projected.beams.reserve(design.num_streams());
  for (int s = 0; s < design.num_streams(); ++s) {
    const Eigen::MatrixXcd herm =
        0.5 * (design.covariances[s] + design.covariances[s].adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm);
    if (eig.eigenvalues().minCoeff() < -1e-8) {
      throw std::invalid_argument("rank1_project requires PSD covariances");
    }
    const int top = static_cast<int>(eig.eigenvalues().size()) - 1;
    const double lambda = std::max(eig.eigenvalues()[top], 0.0);
    const Eigen::VectorXcd u = eig.eigenvectors().col(top);
    projected.design.covariances[s] = lambda * u * u.adjoint();
    projected.beams.push_back(std::sqrt(lambda) * u);
  }
  const Eigen::VectorXd new_signal = projected.design.per_ap_signal_power();
  projected.design.quant_noise =
      design.quant_noise.cwiseMin(beta * new_signal);
  return projected;
}

}  // namespace cfrs
