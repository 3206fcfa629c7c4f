#include "cfrs/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cfrs {

namespace {

void require(bool cond, const std::string& message) {
  if (!cond) throw std::invalid_argument(message);
}

}  // namespace

void SystemConfig::validate() const {
  require(num_aps >= 1, "num_aps must be >= 1");
  require(num_ues >= 1, "num_ues must be >= 1");
  require(fronthaul_capacity > 0.0, "fronthaul_capacity must be > 0");
  require(tx_power > 0.0, "tx_power must be > 0");
  require(noise_power > 0.0, "noise_power must be > 0");
  require(relative_csi_error >= 0.0 && relative_csi_error <= 1.0,
          "relative_csi_error must be in [0, 1]");
  require(region_radius > 0.0, "region_radius must be > 0");
  require(ref_distance > 0.0, "ref_distance must be > 0");
  require(pathloss_exponent > 0.0, "pathloss_exponent must be > 0");
}

ChannelSet ChannelSet::with_zero_error() const {
  ChannelSet out;
  out.estimated = estimated;
  out.error_variance = Eigen::MatrixXd::Zero(estimated.rows(), estimated.cols());
  out.true_channel = true_channel;
  return out;
}

double beta_from_fronthaul(double fronthaul_capacity) {
  if (fronthaul_capacity <= 0.0) {
    throw std::invalid_argument("fronthaul capacity must be > 0 bits/s/Hz");
  }
  return 1.0 / (std::exp2(fronthaul_capacity) - 1.0);
}

namespace {

Eigen::Vector2d sample_disk_point(double radius, RandomStream& rng) {
  const double r = radius * std::sqrt(rng.uniform());
  const double theta = 2.0 * M_PI * rng.uniform();
  return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace

Topology sample_topology(const SystemConfig& cfg, RandomStream& rng) {
  cfg.validate();
  Topology topo;
  topo.ap_positions.reserve(cfg.num_aps);
  topo.ue_positions.reserve(cfg.num_ues);
  for (int i = 0; i < cfg.num_aps; ++i) {
    topo.ap_positions.push_back(sample_disk_point(cfg.region_radius, rng));
  }
  for (int k = 0; k < cfg.num_ues; ++k) {
    topo.ue_positions.push_back(sample_disk_point(cfg.region_radius, rng));
  }
  topo.pathloss.resize(cfg.num_ues, cfg.num_aps);
  for (int k = 0; k < cfg.num_ues; ++k) {
    for (int i = 0; i < cfg.num_aps; ++i) {
      const double dist = (topo.ue_positions[k] - topo.ap_positions[i]).norm();
      topo.pathloss(k, i) = std::pow(dist / cfg.ref_distance, -cfg.pathloss_exponent);
    }
  }
  return topo;
}

ChannelSet sample_channels(const Topology& topology, double relative_csi_error,
                           RandomStream& rng) {
  if (relative_csi_error < 0.0 || relative_csi_error > 1.0) {
    throw std::invalid_argument("relative_csi_error must be in [0, 1]");
  }
  const int K = static_cast<int>(topology.pathloss.rows());
  const int M = static_cast<int>(topology.pathloss.cols());
  ChannelSet channels;
  channels.estimated.resize(K, M);
  channels.error_variance.resize(K, M);
  Eigen::MatrixXcd truth(K, M);
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < M; ++i) {
      const double alpha = topology.pathloss(k, i);
      const std::complex<double> h_hat =
          rng.complex_gaussian((1.0 - relative_csi_error) * alpha);
      const std::complex<double> err = rng.complex_gaussian(relative_csi_error * alpha);
      channels.estimated(k, i) = h_hat;
      channels.error_variance(k, i) = relative_csi_error * alpha;
      truth(k, i) = h_hat + err;
    }
  }
  channels.true_channel = std::move(truth);
  return channels;
}

}  // namespace cfrs
