#pragma once

#include <Eigen/Dense>
#include <vector>

namespace cfrs {

/**
 * Transmit-side design: one Hermitian PSD covariance per stream plus per-AP
 * fronthaul quantization noise powers. Stream order follows SchemeSpec
 * (K private streams, then L common streams for RSMA).
 */
struct BeamDesign {
  std::vector<Eigen::MatrixXcd> covariances;
  Eigen::VectorXd quant_noise;  // omega, length M

  static BeamDesign Zero(int num_streams, int num_aps);

  int num_aps() const { return static_cast<int>(quant_noise.size()); }
  int num_streams() const { return static_cast<int>(covariances.size()); }

  // V <- (V + V^H)/2 on every stream.
  void symmetrize();

  // Per-AP transmit power: sum_s V_s[i][i] + omega[i].
  Eigen::VectorXd per_ap_power() const;
  // Per-AP beamformed signal power: sum_s V_s[i][i].
  Eigen::VectorXd per_ap_signal_power() const;
};

struct FeasibilityReport {
  double max_power_violation = 0.0;      // max_i (signal_i + omega_i - P_tx)
  double max_fronthaul_violation = 0.0;  // max_i (beta * signal_i - omega_i)
  double min_eigenvalue = 0.0;           // over all streams
  double max_hermitian_error = 0.0;      // max |V - V^H| entry
  double min_quant_noise = 0.0;

  bool feasible(double tolerance) const {
    return max_power_violation <= tolerance &&
           max_fronthaul_violation <= tolerance &&
           min_eigenvalue >= -tolerance && max_hermitian_error <= tolerance &&
           min_quant_noise >= -tolerance;
  }
};

FeasibilityReport check_design(const BeamDesign& design, double tx_power, double beta);

}  // namespace cfrs
