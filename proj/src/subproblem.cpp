#include "cfrs/subproblem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfrs {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kZeroChannel = 1e-30;  // squared-norm threshold

// Adds the coefficients of Re(h^H V_s h) over stream s's Hermitian slots.
void add_quad_coeffs(const VariableLayout& layout, int stream,
                     const Eigen::VectorXcd& h, Eigen::VectorXd& coeffs) {
  const int M = layout.mat_dim;
  for (int i = 0; i < M; ++i) {
    coeffs[layout.diag_slot(stream, i)] += std::norm(h(i));
    for (int j = i + 1; j < M; ++j) {
      const std::complex<double> c = std::conj(h(i)) * h(j);
      coeffs[layout.re_slot(stream, i, j)] += 2.0 * c.real();
      coeffs[layout.im_slot(stream, i, j)] += -2.0 * c.imag();
    }
  }
}

// Coefficients of the full interference term I of a rate constraint.
Eigen::VectorXd interference_coeffs(const VariableLayout& layout, const RateTerm& term,
                                    const ChannelSet& channels) {
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(layout.num_vars);
  const Eigen::VectorXcd h_hat = channels.estimated_row(term.channel_ue);
  const Eigen::VectorXd z = channels.error_variance_row(term.channel_ue);
  for (int i = 0; i < layout.mat_dim; ++i) {
    coeffs[layout.omega_slot(i)] += z(i) + std::norm(h_hat(i));
    for (int s : term.self_error_streams) {
      coeffs[layout.diag_slot(s, i)] += z(i);
    }
  }
  for (int s : term.interference_streams) {
    add_quad_coeffs(layout, s, h_hat, coeffs);
  }
  return coeffs;
}

}  // namespace

Eigen::VectorXd vector_from_design(const VariableLayout& layout,
                                   const BeamDesign& design) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(layout.num_vars);
  for (int s = 0; s < layout.num_streams; ++s) {
    const auto& v = design.covariances[s];
    for (int i = 0; i < layout.mat_dim; ++i) {
      u[layout.diag_slot(s, i)] = v(i, i).real();
      for (int j = i + 1; j < layout.mat_dim; ++j) {
        u[layout.re_slot(s, i, j)] = v(i, j).real();
        u[layout.im_slot(s, i, j)] = v(i, j).imag();
      }
    }
  }
  for (int i = 0; i < layout.num_omega; ++i) {
    u[layout.omega_slot(i)] = design.quant_noise(i);
  }
  return u;
}

BeamDesign design_from_vector(const VariableLayout& layout, const Eigen::VectorXd& u) {
  BeamDesign design = BeamDesign::Zero(layout.num_streams, layout.mat_dim);
  for (int s = 0; s < layout.num_streams; ++s) {
    auto& v = design.covariances[s];
    for (int i = 0; i < layout.mat_dim; ++i) {
      v(i, i) = u[layout.diag_slot(s, i)];
      for (int j = i + 1; j < layout.mat_dim; ++j) {
        const std::complex<double> entry(u[layout.re_slot(s, i, j)],
                                         u[layout.im_slot(s, i, j)]);
        v(i, j) = entry;
        v(j, i) = std::conj(entry);
      }
    }
  }
  for (int i = 0; i < layout.num_omega; ++i) {
    design.quant_noise(i) = u[layout.omega_slot(i)];
  }
  return design;
}

ConvexSubproblem build_subproblem(const SchemeSpec& spec, const ChannelSet& channels,
                                  double tx_power, double noise_power, double beta,
                                  const BeamDesign& reference) {
  spec.validate();
  const int K = spec.num_ues;
  const int L = spec.num_common();
  const int S = spec.num_streams();
  const int M = channels.num_aps();
  if (reference.num_streams() != S || reference.num_aps() != M) {
    throw std::invalid_argument("reference design does not match the scheme");
  }

  // A UE whose estimated channel cannot lift any rate above ~1e-12 bits even
  // at full power is handled by the exact degenerate constraint (rate <= 0);
  // its surrogate would otherwise leave the subproblem with no interior.
  std::vector<bool> ue_zero(K);
  for (int k = 0; k < K; ++k) {
    const double gain = channels.estimated.row(k).squaredNorm();
    ue_zero[k] = gain < kZeroChannel ||
                 gain * tx_power * M <= 1e-12 * noise_power;
  }

  ConvexSubproblem problem;
  problem.tx_power = tx_power;
  problem.beta = beta;
  problem.noise_power = noise_power;

  VariableLayout& layout = problem.layout;
  layout.mat_dim = M;
  layout.num_streams = S;
  layout.omega_offset = S * M * M;
  layout.num_omega = M;

  // Rate variables (RSMA only), with structurally-zero budgets eliminated.
  layout.rate_offset = layout.omega_offset + M;
  int next = layout.rate_offset;
  if (spec.kind == SchemeSpec::Kind::kRsma) {
    layout.private_rate_slot.assign(K, -1);
    layout.common_rate_slot.assign(L, {});
    for (int k = 0; k < K; ++k) {
      if (!ue_zero[k]) layout.private_rate_slot[k] = next++;
    }
    for (int l = 0; l < L; ++l) {
      const bool dead = std::any_of(spec.subsets[l].begin(), spec.subsets[l].end(),
                                    [&](int k) { return ue_zero[k]; });
      layout.common_rate_slot[l].assign(spec.subsets[l].size(), -1);
      if (!dead) {
        for (size_t m = 0; m < spec.subsets[l].size(); ++m) {
          layout.common_rate_slot[l][m] = next++;
        }
      }
    }
  }
  layout.num_rate_vars = next - layout.rate_offset;
  layout.t_index = next;
  layout.num_vars = next + 1;
  const int n = layout.num_vars;

  problem.objective = Eigen::VectorXd::Zero(n);
  problem.objective[layout.t_index] = 1.0;

  // Per-AP power and fronthaul rows.
  for (int i = 0; i < M; ++i) {
    Eigen::VectorXd power = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd fronthaul = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < S; ++s) {
      power[layout.diag_slot(s, i)] = 1.0;
      fronthaul[layout.diag_slot(s, i)] = beta;
    }
    power[layout.omega_slot(i)] = 1.0;
    fronthaul[layout.omega_slot(i)] = -1.0;
    problem.ineq_a.push_back(std::move(power));
    problem.ineq_b.push_back(tx_power);
    problem.ineq_a.push_back(std::move(fronthaul));
    problem.ineq_b.push_back(0.0);
  }

  // RSMA: nonnegative rates and per-UE totals covering t.
  if (spec.kind == SchemeSpec::Kind::kRsma) {
    for (int slot = layout.rate_offset;
         slot < layout.rate_offset + layout.num_rate_vars; ++slot) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row[slot] = -1.0;
      problem.ineq_a.push_back(std::move(row));
      problem.ineq_b.push_back(0.0);
    }
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row[layout.t_index] = 1.0;
      if (layout.private_rate_slot[k] >= 0) row[layout.private_rate_slot[k]] = -1.0;
      for (int l = 0; l < L; ++l) {
        if (!spec.subset_contains(l, k)) continue;
        const auto& members = spec.subsets[l];
        const auto pos = std::find(members.begin(), members.end(), k) - members.begin();
        const int slot = layout.common_rate_slot[l][pos];
        if (slot >= 0) row[slot] = -1.0;
      }
      problem.ineq_a.push_back(std::move(row));
      problem.ineq_b.push_back(0.0);
    }
  }

  // Linearized rate constraints.
  const auto terms = rate_terms(spec);
  bool min_rate_pinned = false;
  for (size_t c = 0; c < terms.size(); ++c) {
    const RateTerm& term = terms[c];

    // Rate expression coefficients, in bits.
    Eigen::VectorXd lhs = Eigen::VectorXd::Zero(n);
    bool lhs_eliminated = false;
    switch (term.lhs) {
      case RateTerm::Lhs::kMinRate:
        lhs[layout.t_index] = 1.0;
        break;
      case RateTerm::Lhs::kPrivate: {
        const int slot = layout.private_rate_slot[term.lhs_index];
        if (slot < 0) {
          lhs_eliminated = true;
        } else {
          lhs[slot] = 1.0;
        }
        break;
      }
      case RateTerm::Lhs::kCommonSum: {
        const auto& slots = layout.common_rate_slot[term.lhs_index];
        if (slots.front() < 0) {
          lhs_eliminated = true;
        } else {
          for (int slot : slots) lhs[slot] = 1.0;
        }
        break;
      }
    }
    if (lhs_eliminated) continue;  // rate fixed at 0; the true bound >= 0 holds

    if (ue_zero[term.channel_ue]) {
      // The true bound is identically zero for every design, so the exact
      // constraint is lhs <= 0; the linearized form would needlessly pin the
      // interference to its reference value.
      if (term.lhs == RateTerm::Lhs::kMinRate && min_rate_pinned) continue;
      if (term.lhs == RateTerm::Lhs::kMinRate) min_rate_pinned = true;
      problem.ineq_a.push_back(std::move(lhs));
      problem.ineq_b.push_back(0.0);
      continue;
    }

    LogConstraint log;
    log.term_index = static_cast<int>(c);
    log.interference = interference_coeffs(layout, term, channels);
    log.interference_ref = interference_power(term, reference, channels);
    const double denom_ref = noise_power + log.interference_ref;

    log.y = log.interference;
    add_quad_coeffs(layout, term.signal_stream,
                    channels.estimated_row(term.channel_ue), log.y);
    log.y_const = noise_power;

    log.w = kLn2 * lhs + log.interference / denom_ref;
    log.w_const = std::log(denom_ref) - log.interference_ref / denom_ref;
    problem.log_constraints.push_back(std::move(log));
  }

  return problem;
}

double surrogate_value(const LogConstraint& constraint, const Eigen::VectorXd& u) {
  const double v = constraint.y.dot(u) + constraint.y_const;
  const double interf = constraint.interference.dot(u);
  const double denom_ref = constraint.y_const + constraint.interference_ref;
  return (std::log(v) - std::log(denom_ref) -
          (interf - constraint.interference_ref) / denom_ref) /
         kLn2;
}

Eigen::VectorXd surrogate_gradient(const LogConstraint& constraint,
                                   const Eigen::VectorXd& u) {
  const double v = constraint.y.dot(u) + constraint.y_const;
  const double denom_ref = constraint.y_const + constraint.interference_ref;
  return (constraint.y / v - constraint.interference / denom_ref) / kLn2;
}

namespace {

// Margin of a log constraint with all rate/t slots at zero, in nats.
double design_margin(const LogConstraint& c, const Eigen::VectorXd& u) {
  const double v = c.y.dot(u) + c.y_const;
  if (v <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(v) - c.w.dot(u) - c.w_const;
}

bool psd_blocks_strict(const VariableLayout& layout, const Eigen::VectorXd& u) {
  const BeamDesign d = design_from_vector(layout, u);
  for (const auto& v : d.covariances) {
    Eigen::LLT<Eigen::MatrixXcd> llt(v);
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

}  // namespace

Eigen::VectorXd initial_point(const ConvexSubproblem& problem,
                              const BeamDesign& reference) {
  const VariableLayout& layout = problem.layout;
  const int M = layout.mat_dim;
  const int S = layout.num_streams;
  const double P = problem.tx_power;
  const double beta = problem.beta;

  // Strictly interior anchor for the covariance/omega block: small identity
  // covariances with omega just above the fronthaul floor. The omega
  // overshoot must stay small: blending toward a high-interference anchor
  // would close the surrogate margins of weak or zero-power streams faster
  // (quadratically) than their signal gain opens them (linearly).
  BeamDesign anchor = BeamDesign::Zero(S, M);
  const double tau = 0.01 * P / ((1.0 + beta) * std::max(S, 1));
  for (auto& v : anchor.covariances) {
    v = tau * Eigen::MatrixXcd::Identity(M, M);
  }
  anchor.quant_noise.setConstant(beta * S * tau + 1e-6 * P);

  const Eigen::VectorXd u_anchor = vector_from_design(layout, anchor);
  const Eigen::VectorXd u_ref = vector_from_design(layout, reference);

  for (const double theta : {0.9995, 0.995, 0.97, 0.9, 0.7, 0.4, 0.0}) {
    Eigen::VectorXd u = theta * u_ref + (1.0 - theta) * u_anchor;

    if (!psd_blocks_strict(layout, u)) continue;

    // Rows not involving t or rates must be strictly slack at the blended
    // design (rate slots are still zero here).
    bool affine_ok = true;
    for (size_t j = 0; j < problem.ineq_a.size(); ++j) {
      const Eigen::VectorXd& a = problem.ineq_a[j];
      if (a[layout.t_index] != 0.0) continue;
      const bool touches_rates =
          layout.num_rate_vars > 0 &&
          !a.segment(layout.rate_offset, layout.num_rate_vars).isZero(0.0);
      if (touches_rates) continue;  // nonneg-rate rows pass once rates are set
      const double slack = problem.ineq_b[j] - a.dot(u);
      if (slack <= 1e-12 * (1.0 + std::abs(problem.ineq_b[j]))) {
        affine_ok = false;
        break;
      }
    }
    if (!affine_ok) continue;

    // Every constraint bounding actual rate variables must leave strictly
    // positive room; min-rate constraints only need a valid log argument.
    bool margins_ok = true;
    std::vector<double> margins(problem.log_constraints.size());
    for (size_t c = 0; c < problem.log_constraints.size(); ++c) {
      const LogConstraint& log = problem.log_constraints[c];
      margins[c] = design_margin(log, u);
      const bool needs_room =
          layout.num_rate_vars > 0 &&
          !log.w.segment(layout.rate_offset, layout.num_rate_vars).isZero(0.0);
      if (!std::isfinite(margins[c]) || (needs_room && margins[c] < 1e-11)) {
        margins_ok = false;
        break;
      }
    }
    if (!margins_ok) continue;

    // Fill rates: each slot gets at most margin/(2 * #slots-in-constraint),
    // minimized over the constraints it appears in, so every constraint ends
    // up at no more than half its budget.
    for (size_t c = 0; c < problem.log_constraints.size(); ++c) {
      const LogConstraint& log = problem.log_constraints[c];
      int active = 0;
      for (int slot = layout.rate_offset;
           slot < layout.rate_offset + layout.num_rate_vars; ++slot) {
        if (log.w[slot] != 0.0) ++active;
      }
      if (active == 0) continue;
      const double budget_bits = margins[c] / kLn2;
      for (int slot = layout.rate_offset;
           slot < layout.rate_offset + layout.num_rate_vars; ++slot) {
        if (log.w[slot] == 0.0) continue;
        const double candidate = budget_bits / (2.0 * active);
        u[slot] = (u[slot] == 0.0) ? candidate : std::min(u[slot], candidate);
      }
    }

    // t strictly below every cap that mentions it.
    double t_max = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < problem.ineq_a.size(); ++j) {
      const Eigen::VectorXd& a = problem.ineq_a[j];
      if (a[layout.t_index] <= 0.0) continue;
      const double partial = a.dot(u) - a[layout.t_index] * u[layout.t_index];
      t_max = std::min(t_max, (problem.ineq_b[j] - partial) / a[layout.t_index]);
    }
    for (const LogConstraint& log : problem.log_constraints) {
      const double tcoef = log.w[layout.t_index];
      if (tcoef <= 0.0) continue;
      const double v = log.y.dot(u) + log.y_const;
      const double partial = log.w.dot(u) - tcoef * u[layout.t_index] + log.w_const;
      t_max = std::min(t_max, (std::log(v) - partial) / tcoef);
    }
    if (!std::isfinite(t_max)) t_max = 0.0;  // t unconstrained: any value works
    u[layout.t_index] = t_max - 0.5 * (1.0 + std::abs(t_max));
    return u;
  }
  throw std::runtime_error("no strictly feasible starting point found for subproblem");
}

}  // namespace cfrs
