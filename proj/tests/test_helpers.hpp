#pragma once

#include <Eigen/Dense>

#include "cfrs/design.hpp"
#include "cfrs/model.hpp"
#include "cfrs/rng.hpp"

namespace cfrs::test {

inline Eigen::MatrixXcd random_psd(int m, RandomStream& rng, double scale = 1.0) {
  Eigen::MatrixXcd a(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) a(i, j) = rng.complex_gaussian(1.0);
  }
  return scale * (a * a.adjoint()) / m;
}

// Channels over a flat unit-pathloss topology.
inline ChannelSet random_channels(int num_ues, int num_aps, double rho,
                                  RandomStream& rng) {
  Topology topo;
  topo.pathloss = Eigen::MatrixXd::Ones(num_ues, num_aps);
  topo.ap_positions.assign(num_aps, Eigen::Vector2d::Zero());
  topo.ue_positions.assign(num_ues, Eigen::Vector2d::Zero());
  return sample_channels(topo, rho, rng);
}

// Random feasible design: PSD covariances scaled under the per-AP power
// budget, omega at the fronthaul floor plus slack.
inline BeamDesign random_design(int num_streams, int num_aps, double tx_power,
                                double beta, RandomStream& rng) {
  BeamDesign design = BeamDesign::Zero(num_streams, num_aps);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(num_aps);
  for (auto& v : design.covariances) {
    v = random_psd(num_aps, rng);
    total += v.diagonal().real();
  }
  const double load = 0.3 + 0.6 * rng.uniform();
  const double scale = load * tx_power / ((1.0 + beta) * total.maxCoeff());
  total *= scale;
  for (auto& v : design.covariances) v *= scale;
  for (int i = 0; i < num_aps; ++i) {
    const double slack = tx_power - (1.0 + beta) * total(i);
    design.quant_noise(i) = beta * total(i) + 0.5 * rng.uniform() * slack;
  }
  return design;
}

}  // namespace cfrs::test
