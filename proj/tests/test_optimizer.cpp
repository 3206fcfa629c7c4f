#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cfrs/barrier_solver.hpp"
#include "cfrs/bounds.hpp"
#include "cfrs/optimizer.hpp"
#include "cfrs/subproblem.hpp"
#include "test_helpers.hpp"

using namespace cfrs;
using cfrs::test::random_channels;
using cfrs::test::random_design;
using cfrs::test::random_psd;

namespace {

SystemConfig desk_config() {
  SystemConfig cfg;
  cfg.num_aps = 3;
  cfg.num_ues = 4;
  cfg.fronthaul_capacity = 10.0;
  cfg.tx_power = 100.0;
  cfg.noise_power = 1.0;
  cfg.relative_csi_error = 0.3;
  return cfg;
}

}  // namespace

TEST_CASE("init_design: fronthaul equality at every AP, power at the binding AP") {
  SystemConfig cfg = desk_config();
  cfg.fronthaul_capacity = 1.0;  // beta = 1
  RandomStream rng(31);
  const ChannelSet channels = random_channels(4, 3, 0.2, rng);
  const SchemeSpec spec = SchemeSpec::Sdma(4);
  const BeamDesign design = init_design(spec, channels, cfg);

  const Eigen::VectorXd signal = design.per_ap_signal_power();
  for (int i = 0; i < 3; ++i) {
    CHECK(design.quant_noise(i) ==
          doctest::Approx(1.0 * signal(i)).epsilon(1e-12));  // omega = beta * signal
  }
  // Binding AP: signal = P/(1+beta) = P/2 and omega = P/2, so power = P.
  CHECK(signal.maxCoeff() == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(design.per_ap_power().maxCoeff() == doctest::Approx(100.0).epsilon(1e-12));
  const FeasibilityReport report = check_design(design, cfg.tx_power, 1.0);
  CHECK(report.feasible(1e-9));
}

TEST_CASE("init_design: K = 1, M = 1 closed form") {
  SystemConfig cfg = desk_config();
  cfg.num_aps = 1;
  cfg.num_ues = 1;
  cfg.fronthaul_capacity = 3.0;  // beta = 1/7
  ChannelSet channels;
  channels.estimated = Eigen::MatrixXcd::Constant(1, 1, {2.0, 1.0});
  channels.error_variance = Eigen::MatrixXd::Zero(1, 1);
  const BeamDesign design = init_design(SchemeSpec::Sdma(1), channels, cfg);
  const double beta = 1.0 / 7.0;
  CHECK(design.covariances[0](0, 0).real() ==
        doctest::Approx(cfg.tx_power / (1.0 + beta)).epsilon(1e-12));
  CHECK(design.quant_noise(0) ==
        doctest::Approx(beta * cfg.tx_power / (1.0 + beta)).epsilon(1e-12));
}

TEST_CASE("init_design: all-zero channels fall back to identity covariances") {
  SystemConfig cfg = desk_config();
  ChannelSet channels;
  channels.estimated = Eigen::MatrixXcd::Zero(4, 3);
  channels.error_variance = Eigen::MatrixXd::Ones(4, 3);
  const BeamDesign design = init_design(SchemeSpec::Sdma(4), channels, cfg);
  const FeasibilityReport report =
      check_design(design, cfg.tx_power, beta_from_fronthaul(cfg.fronthaul_capacity));
  CHECK(report.feasible(1e-9));
  CHECK(design.per_ap_signal_power().minCoeff() > 0.0);
}

TEST_CASE("surrogate touches f at the reference and minorizes it elsewhere") {
  RandomStream rng(32);
  const double sigma2 = 1.0;
  const double beta = 1.0 / 1023.0;
  int checked = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const ChannelSet channels = random_channels(3, 2, 0.4, rng);
    const SchemeSpec spec = SchemeSpec::Rsma(3, {{0, 1}, {0, 1, 2}});
    const BeamDesign reference = random_design(5, 2, 50.0, beta, rng);
    for (const RateTerm& term : rate_terms(spec)) {
      const double f_ref = rate_lb(term, reference, channels, sigma2);
      const double s_ref =
          surrogate_rate_lb(term, reference, reference, channels, sigma2);
      CHECK(std::abs(f_ref - s_ref) <= 1e-9);

      const BeamDesign other = random_design(5, 2, 50.0, beta, rng);
      const double f_other = rate_lb(term, other, channels, sigma2);
      const double s_other =
          surrogate_rate_lb(term, other, reference, channels, sigma2);
      CHECK(s_other <= f_other + 1e-9);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("surrogate gradient matches central finite differences of f") {
  RandomStream rng(33);
  const double sigma2 = 1.0;
  const double beta = 0.1;
  const ChannelSet channels = random_channels(3, 2, 0.3, rng);
  const SchemeSpec spec = SchemeSpec::Rsma(3, {{1, 2}, {0, 1, 2}});
  const BeamDesign reference = random_design(5, 2, 30.0, beta, rng);
  const ConvexSubproblem sub =
      build_subproblem(spec, channels, 30.0, sigma2, beta, reference);
  const Eigen::VectorXd u_ref = vector_from_design(sub.layout, reference);
  const auto terms = rate_terms(spec);

  for (const LogConstraint& log : sub.log_constraints) {
    const RateTerm& term = terms[log.term_index];
    const Eigen::VectorXd analytic = surrogate_gradient(log, u_ref);
    // f depends only on covariance/omega slots.
    const int design_slots = sub.layout.rate_offset;
    Eigen::VectorXd fd = Eigen::VectorXd::Zero(design_slots);
    for (int i = 0; i < design_slots; ++i) {
      const double h = 1e-5 * (1.0 + std::abs(u_ref[i]));
      Eigen::VectorXd up = u_ref;
      Eigen::VectorXd dn = u_ref;
      up[i] += h;
      dn[i] -= h;
      const double f_up =
          rate_lb(term, design_from_vector(sub.layout, up), channels, sigma2);
      const double f_dn =
          rate_lb(term, design_from_vector(sub.layout, dn), channels, sigma2);
      fd[i] = (f_up - f_dn) / (2.0 * h);
    }
    const double rel = (analytic.head(design_slots) - fd).norm() /
                       std::max(fd.norm(), 1e-12);
    CHECK(rel <= 1e-5);
  }
}

TEST_CASE("subproblem solve reaches the scalar channel capacity") {
  SystemConfig cfg;
  cfg.num_aps = 1;
  cfg.num_ues = 1;
  cfg.fronthaul_capacity = 30.0;  // beta ~ 1e-9
  cfg.tx_power = 10.0;
  cfg.noise_power = 1.0;
  cfg.relative_csi_error = 0.0;
  ChannelSet channels;
  channels.estimated = Eigen::MatrixXcd::Constant(1, 1, {1.2, 0.4});
  channels.error_variance = Eigen::MatrixXd::Zero(1, 1);

  const double beta = beta_from_fronthaul(cfg.fronthaul_capacity);
  const SchemeSpec spec = SchemeSpec::Sdma(1);
  const BeamDesign ref = init_design(spec, channels, cfg);
  const ConvexSubproblem sub =
      build_subproblem(spec, channels, cfg.tx_power, cfg.noise_power, beta, ref);
  const BarrierResult result = barrier_maximize(sub, initial_point(sub, ref), {});
  CHECK(result.converged);
  const double g = std::norm(channels.estimated(0, 0));
  const double capacity = std::log2(1.0 + cfg.tx_power * g / cfg.noise_power);
  CHECK(result.objective == doctest::Approx(capacity).epsilon(1e-4));
}

TEST_CASE("zero design satisfies the power and fronthaul constraints") {
  const BeamDesign zero = BeamDesign::Zero(4, 3);
  const FeasibilityReport report = check_design(zero, 10.0, 0.5);
  CHECK(report.feasible(0.0));
}

TEST_CASE("subproblem optimum is no worse than the reference point") {
  RandomStream rng(34);
  SystemConfig cfg = desk_config();
  const double beta = beta_from_fronthaul(cfg.fronthaul_capacity);
  for (int rep = 0; rep < 5; ++rep) {
    const ChannelSet channels = random_channels(4, 3, 0.3, rng);
    const SchemeSpec spec = SchemeSpec::Rsma(4, {{0, 2}, {0, 1, 2, 3}});
    const BeamDesign reference = init_design(spec, channels, cfg);
    const double ref_value =
        allocate_rates(spec, reference, channels, cfg.noise_power).min_rate;
    const ConvexSubproblem sub = build_subproblem(spec, channels, cfg.tx_power,
                                                  cfg.noise_power, beta, reference);
    const BarrierResult result =
        barrier_maximize(sub, initial_point(sub, reference), {});
    CHECK(result.objective >= ref_value - 1e-8);
  }
}

TEST_CASE("MM history is non-decreasing and terminates on desk instances") {
  RandomStream rng(35);
  SystemConfig cfg = desk_config();
  SolverSettings settings;
  for (int rep = 0; rep < 4; ++rep) {
    const ChannelSet channels = random_channels(4, 3, 0.3, rng);
    const MmState state = mm_optimize(SchemeSpec::Sdma(4), channels, cfg, settings);
    CHECK(state.converged);
    CHECK(state.iterations <= 51);  // init + at most 50 subproblem solves
    for (size_t t = 1; t < state.history.size(); ++t) {
      CHECK(state.history[t] >= state.history[t - 1] - 1e-6);
    }
    const FeasibilityReport report = check_design(
        state.design, cfg.tx_power, beta_from_fronthaul(cfg.fronthaul_capacity));
    CHECK(report.feasible(settings.feasibility_tolerance));
  }
}

TEST_CASE("robust pipeline at rho_z = 0 equals the zero-error pipeline") {
  RandomStream rng(36);
  SystemConfig cfg = desk_config();
  cfg.relative_csi_error = 0.0;
  const ChannelSet channels = random_channels(4, 3, 0.0, rng);
  const ChannelSet zeroed = channels.with_zero_error();
  SolverSettings settings;
  const MmState a = mm_optimize(SchemeSpec::Sdma(4), channels, cfg, settings);
  const MmState b = mm_optimize(SchemeSpec::Sdma(4), zeroed, cfg, settings);
  CHECK(a.objective == b.objective);
}

TEST_CASE("rank-1 projection: fixed point, identity, never raises AP power") {
  RandomStream rng(37);

  // Rank-1 input is a fixed point.
  Eigen::VectorXcd v(3);
  v << std::complex<double>(1.0, 0.5), std::complex<double>(-0.3, 0.2),
      std::complex<double>(0.0, 1.0);
  BeamDesign rank1 = BeamDesign::Zero(1, 3);
  rank1.covariances[0] = v * v.adjoint();
  rank1.quant_noise.setConstant(0.4);
  const ProjectedDesign fixed = rank1_project(rank1, 0.1);
  CHECK((fixed.design.covariances[0] - rank1.covariances[0]).cwiseAbs().maxCoeff() <=
        1e-10);

  // Identity input: lambda = 1, power per AP drops from 1 to |u_i|^2.
  BeamDesign eye = BeamDesign::Zero(1, 2);
  eye.covariances[0] = Eigen::MatrixXcd::Identity(2, 2);
  eye.quant_noise.setZero();
  const ProjectedDesign projected_eye = rank1_project(eye, 0.2);
  const Eigen::VectorXcd beam = projected_eye.beams[0];
  CHECK(beam.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 2; ++i) {
    CHECK(projected_eye.design.covariances[0](i, i).real() <= 1.0 + 1e-12);
  }

  // Property: per-AP diagonal never increases, over 1000 random PSD streams.
  for (int rep = 0; rep < 1000; ++rep) {
    BeamDesign design = BeamDesign::Zero(1, 3);
    design.covariances[0] = random_psd(3, rng, 2.0);
    design.quant_noise =
        0.25 * design.per_ap_signal_power().array() + 0.1 * rng.uniform();
    const ProjectedDesign projected = rank1_project(design, 0.25);
    for (int i = 0; i < 3; ++i) {
      CHECK(projected.design.covariances[0](i, i).real() <=
            design.covariances[0](i, i).real() + 1e-10);
    }
    CHECK((0.25 * projected.design.per_ap_signal_power() -
           projected.design.quant_noise)
              .maxCoeff() <= 1e-12);
  }

  // Non-PSD input is rejected.
  BeamDesign bad = BeamDesign::Zero(1, 2);
  bad.covariances[0] = -Eigen::MatrixXcd::Identity(2, 2);
  CHECK_THROWS_AS(rank1_project(bad, 0.1), std::invalid_argument);
}

TEST_CASE("rate allocation: no common streams gives min of private bounds") {
  RandomStream rng(38);
  const ChannelSet channels = random_channels(3, 2, 0.2, rng);
  const BeamDesign design = random_design(3, 2, 20.0, 0.1, rng);
  const SchemeSpec spec = SchemeSpec::Rsma(3, {});
  const RateAllocation alloc = allocate_rates(spec, design, channels, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    worst = std::min(worst, sdma_rate_lb(k, design, channels, 1.0));
  }
  CHECK(alloc.min_rate == doctest::Approx(worst).epsilon(1e-12));
}

TEST_CASE("rate allocation: symmetric two-UE instance splits the common rate") {
  // Identical UEs: the max-min optimum forces an equal common split.
  ChannelSet channels;
  channels.estimated.resize(2, 1);
  channels.estimated(0, 0) = 1.0;
  channels.estimated(1, 0) = 1.0;
  channels.error_variance = Eigen::MatrixXd::Zero(2, 1);
  const SchemeSpec spec = SchemeSpec::RsmaSingleCommon(2);
  BeamDesign design = BeamDesign::Zero(3, 1);
  design.covariances[0](0, 0) = 1.0;  // private UE 0
  design.covariances[1](0, 0) = 1.0;  // private UE 1
  design.covariances[2](0, 0) = 4.0;  // common
  design.quant_noise.setZero();
  const RateAllocation alloc = allocate_rates(spec, design, channels, 1.0);
  CHECK(alloc.common_rates[0][0] ==
        doctest::Approx(alloc.common_rates[0][1]).epsilon(1e-4));
  CHECK(alloc.ue_totals[0] == doctest::Approx(alloc.ue_totals[1]).epsilon(1e-6));
}

TEST_CASE("post-projection allocation never exceeds the relaxed objective") {
  RandomStream rng(39);
  SystemConfig cfg = desk_config();
  SolverSettings settings;
  const ChannelSet channels = random_channels(4, 3, 0.3, rng);
  const SchemeSpec spec = SchemeSpec::Rsma(4, {{1, 3}, {0, 1, 2, 3}});
  const MmState state = mm_optimize(spec, channels, cfg, settings);
  const ProjectedDesign projected =
      rank1_project(state.design, beta_from_fronthaul(cfg.fronthaul_capacity));
  const RateAllocation alloc =
      allocate_rates(spec, projected.design, channels, cfg.noise_power);
  CHECK(alloc.min_rate <= state.objective + 1e-8);
}

TEST_CASE("NOMA decoding order sorts by ascending estimated gain") {
  ChannelSet channels;
  channels.estimated.resize(3, 1);
  channels.estimated(0, 0) = std::sqrt(3.0);
  channels.estimated(1, 0) = 1.0;
  channels.estimated(2, 0) = std::sqrt(2.0);
  channels.error_variance = Eigen::MatrixXd::Zero(3, 1);
  CHECK(noma_decoding_order(channels) == std::vector<int>{1, 2, 0});

  channels.estimated.setConstant(1.0);
  CHECK(noma_decoding_order(channels) == std::vector<int>{0, 1, 2});

  ChannelSet one;
  one.estimated = Eigen::MatrixXcd::Ones(1, 2);
  one.error_variance = Eigen::MatrixXd::Zero(1, 2);
  CHECK(noma_decoding_order(one) == std::vector<int>{0});
}
