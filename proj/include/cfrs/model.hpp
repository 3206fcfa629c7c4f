#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "cfrs/rng.hpp"

namespace cfrs {

/**
 * Scenario parameters for one cell-free MIMO setup: M single-antenna APs
 * serving K single-antenna UEs under per-AP power and fronthaul limits,
 * with a relative CSI error model.
 */
struct SystemConfig {
  int num_aps = 3;                   // M
  int num_ues = 4;                   // K
  double fronthaul_capacity = 10.0;  // C_fh, bits/s/Hz
  double tx_power = 100.0;           // P_tx, linear (per AP)
  double noise_power = 1.0;          // sigma^2, linear
  double relative_csi_error = 0.1;   // rho_z in [0, 1]
  double region_radius = 100.0;      // meters
  double ref_distance = 30.0;        // D_ref, meters
  double pathloss_exponent = 3.0;    // eta
  std::uint64_t seed = 1;

  // Throws std::invalid_argument with a field-specific message.
  void validate() const;
};

struct Topology {
  std::vector<Eigen::Vector2d> ap_positions;  // size M
  std::vector<Eigen::Vector2d> ue_positions;  // size K
  Eigen::MatrixXd pathloss;                   // K x M, alpha[k][i]
};

struct ChannelSet {
  Eigen::MatrixXcd estimated;                   // K x M, h_hat
  Eigen::MatrixXd error_variance;               // K x M, z[k][i] = rho_z * alpha[k][i]
  std::optional<Eigen::MatrixXcd> true_channel; // K x M, h = h_hat + e

  int num_ues() const { return static_cast<int>(estimated.rows()); }
  int num_aps() const { return static_cast<int>(estimated.cols()); }
  Eigen::VectorXcd estimated_row(int ue) const { return estimated.row(ue).transpose(); }
  Eigen::VectorXd error_variance_row(int ue) const { return error_variance.row(ue).transpose(); }

  // Same estimated channels with all error variances forced to zero
  // (design-time view used by the non-robust baseline).
  ChannelSet with_zero_error() const;
};

// beta = 1 / (2^C_fh - 1). Throws for C_fh <= 0.
double beta_from_fronthaul(double fronthaul_capacity);

// M + K points i.i.d. uniform on the disk (inverse-CDF radius), path-loss
// alpha[k][i] = (D_ki / D_ref)^(-eta).
Topology sample_topology(const SystemConfig& cfg, RandomStream& rng);

// Rayleigh fading split per the additive error model: h_hat ~ CN(0,(1-rho)a),
// e ~ CN(0, rho*a) independent, h = h_hat + e, z = rho*a.
ChannelSet sample_channels(const Topology& topology, double relative_csi_error,
                           RandomStream& rng);

}  // namespace cfrs
