#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cfrs/bounds.hpp"
#include "cfrs/model.hpp"
#include "cfrs/scheme.hpp"
#include "test_helpers.hpp"

using namespace cfrs;
using cfrs::test::random_channels;
using cfrs::test::random_design;
using cfrs::test::random_psd;

namespace {

constexpr double kLn2 = 0.6931471805599453;

struct McSummary {
  double mean;
  double stderr_;
};

// Sample average of log2(1 + gamma) over error draws for one term.
McSummary mc_rate(const RateTerm& term, const BeamDesign& design,
                  const ChannelSet& channels, double sigma2, int n,
                  RandomStream& rng) {
  const Eigen::VectorXcd h_hat = channels.estimated_row(term.channel_ue);
  const Eigen::VectorXd z = channels.error_variance_row(term.channel_ue);
  const int m = channels.num_aps();
  double mean = 0.0;
  double m2 = 0.0;
  Eigen::VectorXcd e(m);
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < m; ++i) e(i) = rng.complex_gaussian(z(i));
    const double x = std::log1p(sinr_instant(term, design, h_hat, e, sigma2)) / kLn2;
    const double delta = x - mean;
    mean += delta / (s + 1);
    m2 += delta * (x - mean);
  }
  return {mean, std::sqrt(m2 / (n - 1) / n)};
}

}  // namespace

TEST_CASE("zero design gives zero rate for every scheme") {
  RandomStream rng(1);
  const ChannelSet channels = random_channels(3, 2, 0.2, rng);
  const double sigma2 = 1.0;

  const BeamDesign zero2 = BeamDesign::Zero(3, 2);
  for (int k = 0; k < 3; ++k) {
    CHECK(sdma_rate_lb(k, zero2, channels, sigma2) == 0.0);
  }
  const SchemeSpec noma = SchemeSpec::Noma(3, {2, 0, 1});
  for (int k = 0; k < 3; ++k) {
    for (int l = k; l < 3; ++l) {
      CHECK(noma_rate_lb(l, k, zero2, channels, noma, sigma2) == 0.0);
    }
  }
  const SchemeSpec rsma = SchemeSpec::Rsma(3, {{0, 1}, {0, 1, 2}});
  const BeamDesign zero5 = BeamDesign::Zero(5, 2);
  for (int k = 0; k < 3; ++k) {
    CHECK(rsma_private_lb(k, zero5, channels, rsma, sigma2) == 0.0);
  }
  CHECK(rsma_common_lb(0, 0, zero5, channels, rsma, sigma2) == 0.0);
  CHECK(rsma_common_lb(2, 1, zero5, channels, rsma, sigma2) == 0.0);
}

TEST_CASE("scalar point-to-point link achieves log2(1 + P g / sigma^2)") {
  ChannelSet channels;
  channels.estimated.resize(1, 1);
  channels.estimated(0, 0) = std::complex<double>(1.5, -0.5);  // g = 2.5
  channels.error_variance = Eigen::MatrixXd::Zero(1, 1);

  BeamDesign design = BeamDesign::Zero(1, 1);
  const double p = 4.0;
  const double sigma2 = 2.0;
  design.covariances[0](0, 0) = p;

  const double g = std::norm(channels.estimated(0, 0));
  CHECK(sdma_rate_lb(0, design, channels, sigma2) ==
        doctest::Approx(std::log2(1.0 + p * g / sigma2)).epsilon(1e-14));

  // Instantaneous SINR with no error and no quantization noise.
  const Eigen::VectorXcd h = channels.estimated_row(0);
  const Eigen::VectorXcd e = Eigen::VectorXcd::Zero(1);
  CHECK(sdma_sinr_instant(0, design, h, e, sigma2) ==
        doctest::Approx(p * g / sigma2).epsilon(1e-14));
}

TEST_CASE("instantaneous SINR is zero when the serving covariance vanishes") {
  RandomStream rng(2);
  const ChannelSet channels = random_channels(2, 3, 0.3, rng);
  BeamDesign design = random_design(2, 3, 10.0, 0.1, rng);
  design.covariances[0].setZero();
  const Eigen::VectorXcd h = channels.estimated_row(0);
  Eigen::VectorXcd e(3);
  for (int i = 0; i < 3; ++i) e(i) = rng.complex_gaussian(0.3);
  CHECK(sdma_sinr_instant(0, design, h, e, 1.0) == 0.0);
}

TEST_CASE("SDMA bound is a valid lower bound on the Monte Carlo rate") {
  RandomStream rng(42);
  const ChannelSet channels = random_channels(2, 2, 0.3, rng);
  const BeamDesign design = random_design(2, 2, 20.0, 0.2, rng);
  const double sigma2 = 1.0;
  const auto terms = rate_terms(SchemeSpec::Sdma(2));
  RandomStream mc_rng(43);
  for (int k = 0; k < 2; ++k) {
    const double bound = sdma_rate_lb(k, design, channels, sigma2);
    const McSummary mc = mc_rate(terms[k], design, channels, sigma2, 100000, mc_rng);
    CHECK(bound <= mc.mean + 3.0 * mc.stderr_);
  }
}

TEST_CASE("Jensen direction: MC average of the instantaneous rate dominates") {
  RandomStream rng(7);
  const ChannelSet channels = random_channels(1, 2, 0.5, rng);
  const BeamDesign design = random_design(1, 2, 10.0, 1.0, rng);
  const auto terms = rate_terms(SchemeSpec::Sdma(1));
  RandomStream mc_rng(8);
  const McSummary mc = mc_rate(terms[0], design, channels, 1.0, 100000, mc_rng);
  CHECK(sdma_rate_lb(0, design, channels, 1.0) <= mc.mean + 3.0 * mc.stderr_);
}

TEST_CASE("NOMA: empty interference set for the last stream") {
  RandomStream rng(3);
  const ChannelSet channels = random_channels(3, 2, 0.2, rng);
  const BeamDesign design = random_design(3, 2, 15.0, 0.5, rng);
  const SchemeSpec spec = SchemeSpec::Noma(3, {1, 2, 0});
  const double sigma2 = 1.0;

  // k = K-1: only quantization plus self-error terms remain in I.
  const auto terms = rate_terms(spec);
  const RateTerm& last = terms.back();  // (k = K-1, l = K-1)
  CHECK(last.interference_streams.empty());

  const int decoder = spec.noma_order[2];
  const Eigen::VectorXcd h_hat = channels.estimated_row(decoder);
  const Eigen::VectorXd z = channels.error_variance_row(decoder);
  double expected_i = 0.0;
  for (int i = 0; i < 2; ++i) {
    double diag = design.quant_noise(i);
    for (int s = 0; s < 3; ++s) diag += design.covariances[s](i, i).real();
    expected_i += z(i) * diag;
    expected_i += std::norm(h_hat(i)) * design.quant_noise(i);
  }
  const double signal = quad_form(h_hat, design.covariances[decoder]);
  CHECK(noma_rate_lb(2, 2, design, channels, spec, sigma2) ==
        doctest::Approx(std::log2(1.0 + signal / (sigma2 + expected_i))).epsilon(1e-12));
}

TEST_CASE("K = 1: NOMA and RSMA(L=0) coincide with SDMA") {
  RandomStream rng(4);
  const ChannelSet channels = random_channels(1, 3, 0.4, rng);
  const BeamDesign design = random_design(1, 3, 10.0, 0.2, rng);
  const double sigma2 = 1.7;
  const double sdma = sdma_rate_lb(0, design, channels, sigma2);
  const double noma =
      noma_rate_lb(0, 0, design, channels, SchemeSpec::Noma(1, {0}), sigma2);
  const double rsma =
      rsma_private_lb(0, design, channels, SchemeSpec::Rsma(1, {}), sigma2);
  CHECK(std::abs(sdma - noma) <= 1e-12);
  CHECK(std::abs(sdma - rsma) <= 1e-12);
}

TEST_CASE("NOMA bound is below the Eq.-(10) Monte Carlo oracle") {
  RandomStream rng(5);
  const ChannelSet channels = random_channels(3, 2, 0.3, rng);
  const BeamDesign design = random_design(3, 2, 12.0, 1.0 / 7.0, rng);
  const SchemeSpec spec = SchemeSpec::Noma(3, {0, 2, 1});
  const double sigma2 = 1.0;
  const auto terms = rate_terms(spec);
  RandomStream mc_rng(6);
  int index = 0;
  for (int k = 0; k < 3; ++k) {
    for (int l = k; l < 3; ++l, ++index) {
      const double bound = noma_rate_lb(l, k, design, channels, spec, sigma2);
      const McSummary mc =
          mc_rate(terms[index], design, channels, sigma2, 100000, mc_rng);
      CHECK(bound <= mc.mean + 3.0 * mc.stderr_);
    }
  }
}

TEST_CASE("RSMA: decode order, empty Q for the last common signal") {
  const SchemeSpec spec = SchemeSpec::Rsma(3, {{0, 1}, {0, 1, 2}});
  // UE 0 decodes the larger subset (index 1) first, then subset 0.
  CHECK(spec.decode_order(0) == std::vector<int>{1, 0});
  CHECK(spec.not_yet_decoded(0, 1) == std::vector<int>{0});
  CHECK(spec.not_yet_decoded(0, 0).empty());
  CHECK(spec.decode_order(2) == std::vector<int>{1});
}

TEST_CASE("RSMA bounds collapse correctly in edge cases") {
  RandomStream rng(9);
  const ChannelSet channels = random_channels(3, 2, 0.25, rng);
  const double sigma2 = 1.0;
  const SchemeSpec rsma = SchemeSpec::Rsma(3, {{0, 1}, {0, 1, 2}});

  // All common covariances zero: f_c = 0 and f_p equals SDMA's bound.
  BeamDesign design = random_design(5, 2, 10.0, 0.1, rng);
  design.covariances[3].setZero();
  design.covariances[4].setZero();
  for (int l = 0; l < 2; ++l) {
    for (int member : rsma.subsets[l]) {
      CHECK(rsma_common_lb(member, l, design, channels, rsma, sigma2) == 0.0);
    }
  }
  BeamDesign single = BeamDesign::Zero(3, 2);
  for (int s = 0; s < 3; ++s) single.covariances[s] = design.covariances[s];
  single.quant_noise = design.quant_noise;
  for (int k = 0; k < 3; ++k) {
    CHECK(rsma_private_lb(k, design, channels, rsma, sigma2) ==
          doctest::Approx(sdma_rate_lb(k, single, channels, sigma2)).epsilon(1e-14));
  }

  // Zero private covariance: f_p = 0.
  design.covariances[1].setZero();
  CHECK(rsma_private_lb(1, design, channels, rsma, sigma2) == 0.0);
}

TEST_CASE("RSMA bounds are below their Eq.-(17) Monte Carlo oracles") {
  RandomStream rng(10);
  const ChannelSet channels = random_channels(3, 2, 0.3, rng);
  const SchemeSpec spec = SchemeSpec::Rsma(3, {{1, 2}, {0, 1, 2}});
  const BeamDesign design = random_design(5, 2, 15.0, 1.0 / 1023.0, rng);
  const double sigma2 = 1.0;
  const auto terms = rate_terms(spec);
  RandomStream mc_rng(11);
  for (size_t t = 0; t < terms.size(); ++t) {
    const McSummary mc = mc_rate(terms[t], design, channels, sigma2, 100000, mc_rng);
    const double bound = rate_lb(terms[t], design, channels, sigma2);
    CHECK(bound <= mc.mean + 3.0 * mc.stderr_);
  }
}

TEST_CASE("zero-error collapse: bound equals the instantaneous rate at e = 0") {
  RandomStream rng(12);
  const ChannelSet channels = random_channels(3, 3, 0.0, rng);
  const SchemeSpec spec = SchemeSpec::Rsma(3, {{0, 2}, {0, 1, 2}});
  const BeamDesign design = random_design(5, 3, 20.0, 0.125, rng);
  const double sigma2 = 1.3;
  const Eigen::VectorXcd zero_err = Eigen::VectorXcd::Zero(3);
  for (const RateTerm& term : rate_terms(spec)) {
    const double bound = rate_lb(term, design, channels, sigma2);
    const double instant =
        std::log1p(sinr_instant(term, design, channels.estimated_row(term.channel_ue),
                                zero_err, sigma2)) /
        kLn2;
    CHECK(std::abs(bound - instant) <= 1e-12);
  }
}

TEST_CASE("bounds never increase when quantization noise grows") {
  RandomStream rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const ChannelSet channels = random_channels(3, 2, 0.4, rng);
    const SchemeSpec spec = SchemeSpec::Rsma(3, {{0, 1}, {0, 1, 2}});
    const BeamDesign design = random_design(5, 2, 10.0, 0.05, rng);
    for (const RateTerm& term : rate_terms(spec)) {
      const double base = rate_lb(term, design, channels, 1.0);
      for (int i = 0; i < 2; ++i) {
        BeamDesign bumped = design;
        bumped.quant_noise(i) += 0.5;
        CHECK(rate_lb(term, bumped, channels, 1.0) <= base + 1e-12);
      }
    }
  }
}

TEST_CASE("diagonal identity for the self-error term") {
  RandomStream rng(14);
  const int m = 3;
  const ChannelSet channels = random_channels(2, m, 0.6, rng);
  const BeamDesign design = random_design(2, m, 10.0, 0.2, rng);

  // z^H (Omega + V_d) z computed with dense matrices against the weighted
  // diagonal sum used internally.
  const Eigen::VectorXd zvar = channels.error_variance_row(0);
  const Eigen::VectorXd zsqrt = zvar.cwiseSqrt();
  Eigen::MatrixXd dense = design.quant_noise.asDiagonal();
  for (const auto& v : design.covariances) {
    dense += v.diagonal().real().asDiagonal();
  }
  const double via_matrix = zsqrt.dot(dense * zsqrt);
  double via_sum = 0.0;
  for (int i = 0; i < m; ++i) {
    double diag = design.quant_noise(i);
    for (const auto& v : design.covariances) diag += v(i, i).real();
    via_sum += zvar(i) * diag;
  }
  CHECK(via_matrix == doctest::Approx(via_sum).epsilon(1e-14));
}

TEST_CASE("MC mean of e^H A e matches the closed form sum_i z_i A_ii") {
  RandomStream rng(15);
  const int m = 3;
  const Eigen::MatrixXcd a = random_psd(m, rng, 2.0);
  Eigen::VectorXd z(m);
  z << 0.5, 1.5, 0.2;
  double expected = 0.0;
  for (int i = 0; i < m; ++i) expected += z(i) * a(i, i).real();

  const int n = 100000;
  double mean = 0.0;
  double m2 = 0.0;
  Eigen::VectorXcd e(m);
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < m; ++i) e(i) = rng.complex_gaussian(z(i));
    const double x = std::real(e.dot(a * e));
    const double delta = x - mean;
    mean += delta / (s + 1);
    m2 += delta * (x - mean);
  }
  const double se = std::sqrt(m2 / (n - 1) / n);
  CHECK(std::abs(mean - expected) <= 3.0 * se);
}

TEST_CASE("errors: invalid indices and mismatched dimensions") {
  RandomStream rng(16);
  const ChannelSet channels = random_channels(2, 2, 0.1, rng);
  const BeamDesign design = random_design(2, 2, 5.0, 0.3, rng);
  const SchemeSpec noma = SchemeSpec::Noma(2, {0, 1});
  CHECK_THROWS_AS(noma_rate_lb(0, 1, design, channels, noma, 1.0),
                  std::invalid_argument);  // l < k
  const SchemeSpec rsma = SchemeSpec::Rsma(3, {{0, 1}, {0, 1, 2}});
  const ChannelSet channels3 = random_channels(3, 2, 0.1, rng);
  const BeamDesign design5 = random_design(5, 2, 5.0, 0.3, rng);
  CHECK_THROWS_AS(rsma_common_lb(2, 0, design5, channels3, rsma, 1.0),
                  std::invalid_argument);  // UE 2 not in subset 0
  const BeamDesign wrong = random_design(2, 3, 5.0, 0.3, rng);
  CHECK_THROWS_AS(sdma_rate_lb(0, wrong, channels, 1.0), std::invalid_argument);
}
