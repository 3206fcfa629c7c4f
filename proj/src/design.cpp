#include "cfrs/design.hpp"

namespace cfrs {

BeamDesign BeamDesign::Zero(int num_streams, int num_aps) {
  BeamDesign design;
  design.covariances.assign(num_streams, Eigen::MatrixXcd::Zero(num_aps, num_aps));
  design.quant_noise = Eigen::VectorXd::Zero(num_aps);
  return design;
}

void BeamDesign::symmetrize() {
  for (auto& v : covariances) {
    v = 0.5 * (v + v.adjoint()).eval();
  }
}

Eigen::VectorXd BeamDesign::per_ap_signal_power() const {
  Eigen::VectorXd signal = Eigen::VectorXd::Zero(num_aps());
  for (const auto& v : covariances) {
    signal += v.diagonal().real();
  }
  return signal;
}

Eigen::VectorXd BeamDesign::per_ap_power() const {
  return per_ap_signal_power() + quant_noise;
}

FeasibilityReport check_design(const BeamDesign& design, double tx_power, double beta) {
  FeasibilityReport report;
  const Eigen::VectorXd signal = design.per_ap_signal_power();
  report.max_power_violation =
      (signal + design.quant_noise).maxCoeff() - tx_power;
  report.max_fronthaul_violation = (beta * signal - design.quant_noise).maxCoeff();
  report.min_quant_noise = design.quant_noise.minCoeff();
  report.min_eigenvalue = 0.0;
  report.max_hermitian_error = 0.0;
  for (const auto& v : design.covariances) {
    report.max_hermitian_error =
        std::max(report.max_hermitian_error, (v - v.adjoint()).cwiseAbs().maxCoeff());
    const Eigen::MatrixXcd herm = 0.5 * (v + v.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = std::min(report.min_eigenvalue, eig.eigenvalues().minCoeff());
  }
  return report;
}

}  // namespace cfrs
