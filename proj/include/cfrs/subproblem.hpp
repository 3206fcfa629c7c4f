#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cfrs/bounds.hpp"
#include "cfrs/design.hpp"
#include "cfrs/model.hpp"
#include "cfrs/scheme.hpp"

namespace cfrs {

/**
 * Variable layout of the convex MM subproblem over a real parameter vector u:
 *
 *   [stream 0 params | ... | stream S-1 params | omega (M) | rates | t]
 *
 * Each Hermitian M x M covariance uses M^2 reals: the M diagonal entries,
 * then (Re, Im) pairs of the upper triangle row-major. Rate variables exist
 * only for RSMA; structurally-zero rates (a member UE with zero estimated
 * channel forces a subset's budget to 0) are eliminated and their slots are
 * marked -1.
 */
struct VariableLayout {
  int mat_dim = 0;      // M (0 for the pure-LP configuration)
  int num_streams = 0;  // S
  int omega_offset = 0;
  int num_omega = 0;
  int rate_offset = 0;
  int num_rate_vars = 0;
  int t_index = 0;
  int num_vars = 0;

  std::vector<int> private_rate_slot;              // per UE; -1 = fixed 0 / absent
  std::vector<std::vector<int>> common_rate_slot;  // [subset][member position]

  int stream_offset(int s) const { return s * mat_dim * mat_dim; }
  int diag_slot(int s, int i) const { return stream_offset(s) + i; }
  int offdiag_pair(int i, int j) const {  // i < j
    return i * mat_dim - i * (i + 1) / 2 + (j - i - 1);
  }
  int re_slot(int s, int i, int j) const {
    return stream_offset(s) + mat_dim + 2 * offdiag_pair(i, j);
  }
  int im_slot(int s, int i, int j) const { return re_slot(s, i, j) + 1; }
  int omega_slot(int i) const { return omega_offset + i; }
};

// One linearized rate constraint in nats:  w.u + w_const <= ln(y.u + y_const).
struct LogConstraint {
  Eigen::VectorXd w;
  double w_const = 0.0;
  Eigen::VectorXd y;
  double y_const = 0.0;
  // Interference-only coefficients and the reference interference, kept for
  // the analytic surrogate gradient.
  Eigen::VectorXd interference;
  double interference_ref = 0.0;
  int term_index = -1;
};

struct ConvexSubproblem {
  VariableLayout layout;
  Eigen::VectorXd objective;  // maximize objective . u
  std::vector<Eigen::VectorXd> ineq_a;
  std::vector<double> ineq_b;  // ineq_a[j] . u <= ineq_b[j]
  std::vector<LogConstraint> log_constraints;
  double tx_power = 0.0;
  double beta = 0.0;
  double noise_power = 0.0;

  int num_vars() const { return layout.num_vars; }
};

// Builds the scheme's surrogate max-min subproblem linearized at `reference`
// (Algorithm 1 line 7). The reference must be dimensionally consistent with
// the scheme; it is the previous MM iterate.
ConvexSubproblem build_subproblem(const SchemeSpec& spec, const ChannelSet& channels,
                                  double tx_power, double noise_power, double beta,
                                  const BeamDesign& reference);

// Mapping between designs and parameter vectors. Rate/t slots are zeroed by
// vector_from_design and ignored by design_from_vector.
Eigen::VectorXd vector_from_design(const VariableLayout& layout,
                                   const BeamDesign& design);
BeamDesign design_from_vector(const VariableLayout& layout, const Eigen::VectorXd& u);

// Surrogate rate (bits/s/Hz) of one log constraint at the design encoded in
// u's covariance/omega slots, and its analytic gradient over those slots.
double surrogate_value(const LogConstraint& constraint, const Eigen::VectorXd& u);
Eigen::VectorXd surrogate_gradient(const LogConstraint& constraint,
                                   const Eigen::VectorXd& u);

// A strictly feasible interior point anchored at the (feasible) reference
// design. Throws std::runtime_error if none of the blend factors yields a
// strictly interior point.
Eigen::VectorXd initial_point(const ConvexSubproblem& problem,
                              const BeamDesign& reference);

}  // namespace cfrs
