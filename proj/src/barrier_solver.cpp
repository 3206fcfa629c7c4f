#include "cfrs/barrier_solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfrs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Barrier value at u, or +inf when u is not strictly interior.
double barrier_value(const ConvexSubproblem& p, const Eigen::VectorXd& u) {
  double phi = 0.0;
  for (size_t j = 0; j < p.ineq_a.size(); ++j) {
    const double slack = p.ineq_b[j] - p.ineq_a[j].dot(u);
    if (!(slack > 0.0)) return kInf;
    phi -= std::log(slack);
  }
  for (const LogConstraint& c : p.log_constraints) {
    const double v = c.y.dot(u) + c.y_const;
    if (!(v > 0.0)) return kInf;
    const double s = std::log(v) - c.w.dot(u) - c.w_const;
    if (!(s > 0.0)) return kInf;
    phi -= std::log(s) + std::log(v);
  }
  if (p.layout.num_streams > 0) {
    const BeamDesign design = design_from_vector(p.layout, u);
    for (const auto& vmat : design.covariances) {
      Eigen::LLT<Eigen::MatrixXcd> llt(vmat);
      if (llt.info() != Eigen::Success) return kInf;
      double logdet = 0.0;
      for (int i = 0; i < vmat.rows(); ++i) {
        const double lii = std::real(llt.matrixLLT()(i, i));
        if (!(lii > 0.0)) return kInf;
        logdet += std::log(lii);
      }
      phi -= 2.0 * logdet;
    }
  }
  return std::isfinite(phi) ? phi : kInf;
}

// Gradient and Hessian of the barrier at a strictly interior u.
void barrier_derivatives(const ConvexSubproblem& p, const Eigen::VectorXd& u,
                         Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
  const int n = p.num_vars();
  grad->setZero(n);
  hess->setZero(n, n);

  for (size_t j = 0; j < p.ineq_a.size(); ++j) {
    const Eigen::VectorXd& a = p.ineq_a[j];
    const double slack = p.ineq_b[j] - a.dot(u);
    grad->noalias() += a / slack;
    hess->noalias() += (a * a.transpose()) / (slack * slack);
  }

  for (const LogConstraint& c : p.log_constraints) {
    const double v = c.y.dot(u) + c.y_const;
    const double s = std::log(v) - c.w.dot(u) - c.w_const;
    const Eigen::VectorXd ds = c.y / v - c.w;  // gradient of s
    grad->noalias() += -ds / s - c.y / v;
    hess->noalias() += (ds * ds.transpose()) / (s * s);
    hess->noalias() += (c.y * c.y.transpose()) * (1.0 / (s * v * v) + 1.0 / (v * v));
  }

  const VariableLayout& layout = p.layout;
  const int M = layout.mat_dim;
  if (layout.num_streams > 0 && M > 0) {
    const BeamDesign design = design_from_vector(layout, u);
    const int nparams = M * M;
    std::vector<Eigen::MatrixXcd> t_mats(nparams);
    for (int s = 0; s < layout.num_streams; ++s) {
      const Eigen::MatrixXcd& vmat = design.covariances[s];
      Eigen::LLT<Eigen::MatrixXcd> llt(vmat);
      const Eigen::MatrixXcd w_inv =
          llt.solve(Eigen::MatrixXcd::Identity(M, M));

      // grad of -ln det V over this block's parameters
      for (int i = 0; i < M; ++i) {
        (*grad)[layout.diag_slot(s, i)] += -std::real(w_inv(i, i));
        for (int j = i + 1; j < M; ++j) {
          (*grad)[layout.re_slot(s, i, j)] += -2.0 * std::real(w_inv(i, j));
          (*grad)[layout.im_slot(s, i, j)] += -2.0 * std::imag(w_inv(i, j));
        }
      }

      // T_p = W * B_p for each basis direction B_p; H_pq = Re tr(T_p T_q).
      // W E_ij has W(:, i) in column j and zeros elsewhere.
      int param = 0;
      std::vector<int> slots(nparams);
      for (int i = 0; i < M; ++i) {
        t_mats[param].setZero(M, M);
        t_mats[param].col(i) = w_inv.col(i);
        slots[param] = layout.diag_slot(s, i);
        ++param;
      }
      for (int i = 0; i < M; ++i) {
        for (int j = i + 1; j < M; ++j) {
          Eigen::MatrixXcd re = Eigen::MatrixXcd::Zero(M, M);
          re.col(j) = w_inv.col(i);
          re.col(i) += w_inv.col(j);
          Eigen::MatrixXcd im = Eigen::MatrixXcd::Zero(M, M);
          im.col(j) = std::complex<double>(0.0, 1.0) * w_inv.col(i);
          im.col(i) -= std::complex<double>(0.0, 1.0) * w_inv.col(j);
          t_mats[param] = std::move(re);
          slots[param] = layout.re_slot(s, i, j);
          ++param;
          t_mats[param] = std::move(im);
          slots[param] = layout.im_slot(s, i, j);
          ++param;
        }
      }
      for (int a = 0; a < nparams; ++a) {
        for (int b = a; b < nparams; ++b) {
          const double value =
              (t_mats[a].array() * t_mats[b].transpose().array()).sum().real();
          (*hess)(slots[a], slots[b]) += value;
          if (a != b) (*hess)(slots[b], slots[a]) += value;
        }
      }
    }
  }
}

}  // namespace

bool strictly_feasible(const ConvexSubproblem& problem, const Eigen::VectorXd& u) {
  return std::isfinite(barrier_value(problem, u));
}

BarrierResult barrier_maximize(const ConvexSubproblem& problem,
                               const Eigen::VectorXd& start,
                               const BarrierSettings& settings) {
  const int n = problem.num_vars();
  if (start.size() != n) {
    throw std::invalid_argument("barrier start has wrong dimension");
  }
  if (!strictly_feasible(problem, start)) {
    throw std::invalid_argument("barrier start is not strictly feasible");
  }

  const double nu = static_cast<double>(problem.ineq_a.size()) +
                    2.0 * static_cast<double>(problem.log_constraints.size()) +
                    static_cast<double>(problem.layout.num_streams) *
                        static_cast<double>(problem.layout.mat_dim);

  BarrierResult result;
  Eigen::VectorXd u = start;
  double tau = settings.tau_initial;
  int total_newton = 0;
  bool stalled = false;

  Eigen::VectorXd grad_phi(n);
  Eigen::MatrixXd hess(n, n);

  while (true) {
    const bool final_stage = nu / tau <= settings.gap_tolerance;
    const double tol = final_stage ? settings.newton_tolerance
                                   : settings.centering_tolerance;
    double phi = barrier_value(problem, u);

    for (int it = 0; it < settings.max_newton_per_stage; ++it) {
      if (total_newton >= settings.max_total_newton) {
        stalled = true;
        break;
      }
      barrier_derivatives(problem, u, &grad_phi, &hess);
      Eigen::VectorXd grad_f = -tau * problem.objective + grad_phi;

      // Newton direction with escalating ridge regularization.
      Eigen::VectorXd step;
      const double diag_scale = std::max(hess.diagonal().maxCoeff(), 1.0);
      double ridge = 0.0;
      for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::MatrixXd h = hess;
        if (ridge > 0.0) h.diagonal().array() += ridge * diag_scale;
        Eigen::LLT<Eigen::MatrixXd> llt(h);
        if (llt.info() == Eigen::Success) {
          step = llt.solve(-grad_f);
          if (step.allFinite()) break;
        }
        step.resize(0);
        ridge = (ridge == 0.0) ? 1e-14 : ridge * 100.0;
      }
      if (step.size() == 0) {
        stalled = true;
        break;
      }

      const double slope = grad_f.dot(step);
      const double decrement = std::sqrt(std::max(-slope, 0.0));
      if (decrement <= tol) break;

      // Backtrack to the interior, then Armijo on f = -tau g.u + phi.
      double alpha = 1.0;
      double f_curr = -tau * problem.objective.dot(u) + phi;
      double phi_trial = kInf;
      bool accepted = false;
      for (int bt = 0; bt < 70; ++bt) {
        const Eigen::VectorXd trial = u + alpha * step;
        phi_trial = barrier_value(problem, trial);
        if (std::isfinite(phi_trial)) {
          const double f_trial = -tau * problem.objective.dot(trial) + phi_trial;
          if (f_trial <= f_curr + 0.25 * alpha * slope) {
            u = trial;
            phi = phi_trial;
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      ++total_newton;
      if (!accepted) {
        stalled = true;
        break;
      }
    }

    result.gap = nu / tau;
    if (final_stage || stalled || total_newton >= settings.max_total_newton) break;
    tau *= settings.tau_factor;
  }

  result.solution = u;
  result.objective = problem.objective.dot(u);
  result.newton_steps = total_newton;
  result.converged = !stalled && result.gap <= settings.gap_tolerance;
  result.status = result.converged ? "optimal"
                 : stalled         ? "stalled at gap " + std::to_string(result.gap)
                                   : "newton budget exhausted";
  return result;
}

}  // namespace cfrs
