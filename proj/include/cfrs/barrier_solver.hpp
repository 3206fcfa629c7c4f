#pragma once

#include <Eigen/Dense>
#include <string>

#include "cfrs/subproblem.hpp"

namespace cfrs {

/**
 * Primal path-following barrier solver for ConvexSubproblem instances:
 * maximize a linear objective over affine inequalities, linearized rate
 * constraints (epigraph-of-exp form), and Hermitian PSD stream blocks.
 *
 * Uses the canonical self-concordant barrier of the feasible set
 * (-ln slack, -ln(ln y - w) - ln y, -ln det V), so the suboptimality of a
 * centered iterate is bounded by nu / tau. Damped Newton with feasibility
 * and Armijo backtracking on each centering step.
 */
struct BarrierSettings {
  double gap_tolerance = 1e-9;
  double tau_initial = 1.0;
  double tau_factor = 20.0;
  double newton_tolerance = 1e-6;      // Newton decrement at the final stage
  double centering_tolerance = 0.25;   // decrement at intermediate stages
  int max_newton_per_stage = 120;
  int max_total_newton = 8000;
};

struct BarrierResult {
  Eigen::VectorXd solution;
  double objective = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  int newton_steps = 0;
  bool converged = false;
  std::string status;
};

// Strict feasibility (interior of every constraint) of u.
bool strictly_feasible(const ConvexSubproblem& problem, const Eigen::VectorXd& u);

// Maximizes from a strictly feasible start. Throws std::invalid_argument if
// the start is not strictly feasible.
BarrierResult barrier_maximize(const ConvexSubproblem& problem,
                               const Eigen::VectorXd& start,
                               const BarrierSettings& settings = {});

}  // namespace cfrs
