#include "cfrs/bounds.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cfrs {

namespace {

constexpr double kDenominatorFloor = 1e-15;
constexpr double kLn2 = 0.6931471805599453;

std::vector<int> all_streams(int count) {
  std::vector<int> s(count);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

std::vector<int> streams_except(int count, int excluded) {
  std::vector<int> s;
  s.reserve(count - 1);
  for (int i = 0; i < count; ++i) {
    if (i != excluded) s.push_back(i);
  }
  return s;
}

void check_term(const RateTerm& term, const BeamDesign& design,
                const ChannelSet& channels) {
  if (design.num_streams() == 0 || design.num_aps() != channels.num_aps()) {
    throw std::invalid_argument("design and channel dimensions disagree");
  }
  if (term.channel_ue < 0 || term.channel_ue >= channels.num_ues() ||
      term.signal_stream < 0 || term.signal_stream >= design.num_streams()) {
    throw std::invalid_argument("rate term indexes outside the design");
  }
}

double guarded_denominator(double value) {
  if (value < -1e-9) {
    throw std::domain_error(
        "negative rate denominator: a covariance violates the PSD invariant");
  }
  return std::max(value, kDenominatorFloor);
}

}  // namespace

std::vector<RateTerm> rate_terms(const SchemeSpec& spec) {
  spec.validate();
  const int K = spec.num_ues;
  std::vector<RateTerm> terms;
  switch (spec.kind) {
    case SchemeSpec::Kind::kSdma: {
      for (int k = 0; k < K; ++k) {
        RateTerm t;
        t.channel_ue = k;
        t.signal_stream = k;
        t.interference_streams = streams_except(K, k);
        t.self_error_streams = all_streams(K);
        t.lhs = RateTerm::Lhs::kMinRate;
        terms.push_back(std::move(t));
      }
      break;
    }
    case SchemeSpec::Kind::kNoma: {
      for (int k = 0; k < K; ++k) {
        for (int l = k; l < K; ++l) {
          RateTerm t;
          t.channel_ue = spec.noma_order[l];
          t.signal_stream = spec.noma_order[k];
          for (int m = k + 1; m < K; ++m) {
            t.interference_streams.push_back(spec.noma_order[m]);
          }
          t.self_error_streams = all_streams(K);
          t.lhs = RateTerm::Lhs::kMinRate;
          terms.push_back(std::move(t));
        }
      }
      break;
    }
    case SchemeSpec::Kind::kRsma: {
      const int L = spec.num_common();
      for (int l = 0; l < L; ++l) {
        for (int member : spec.subsets[l]) {
          RateTerm t;
          t.channel_ue = member;
          t.signal_stream = K + l;
          // Private signals all interfere; common signals interfere when the
          // UE never decodes them or has not decoded them yet.
          for (int j = 0; j < K; ++j) t.interference_streams.push_back(j);
          for (int m = 0; m < L; ++m) {
            if (!spec.subset_contains(m, member)) {
              t.interference_streams.push_back(K + m);
            }
          }
          for (int m : spec.not_yet_decoded(member, l)) {
            t.interference_streams.push_back(K + m);
          }
          t.self_error_streams = all_streams(K + L);
          t.lhs = RateTerm::Lhs::kCommonSum;
          t.lhs_index = l;
          terms.push_back(std::move(t));
        }
      }
      for (int k = 0; k < K; ++k) {
        RateTerm t;
        t.channel_ue = k;
        t.signal_stream = k;
        t.interference_streams = streams_except(K, k);
        for (int m = 0; m < L; ++m) {
          if (!spec.subset_contains(m, k)) t.interference_streams.push_back(K + m);
        }
        t.self_error_streams = all_streams(K + L);
        t.lhs = RateTerm::Lhs::kPrivate;
        t.lhs_index = k;
        terms.push_back(std::move(t));
      }
      break;
    }
  }
  return terms;
}

double quad_form(const Eigen::VectorXcd& h, const Eigen::MatrixXcd& v) {
  if (h.size() != v.rows() || v.rows() != v.cols()) {
    throw std::invalid_argument("quad_form dimension mismatch");
  }
  const double value = std::real(h.dot(v * h));
  return std::max(value, 0.0);
}

double signal_power(const RateTerm& term, const BeamDesign& design,
                    const ChannelSet& channels) {
  check_term(term, design, channels);
  return quad_form(channels.estimated_row(term.channel_ue),
                   design.covariances[term.signal_stream]);
}

double interference_power(const RateTerm& term, const BeamDesign& design,
                          const ChannelSet& channels) {
  check_term(term, design, channels);
  const Eigen::VectorXcd h_hat = channels.estimated_row(term.channel_ue);
  const Eigen::VectorXd z = channels.error_variance_row(term.channel_ue);
  const int M = design.num_aps();

  // z_k^H (Omega + V_d) z_k with z_k the square-rooted variances: a plain
  // variance-weighted sum over the diagonals.
  double self_error = 0.0;
  for (int i = 0; i < M; ++i) {
    double diag = design.quant_noise(i);
    for (int s : term.self_error_streams) {
      diag += std::real(design.covariances[s](i, i));
    }
    self_error += z(i) * diag;
  }

  double cross = 0.0;
  for (int i = 0; i < M; ++i) {
    cross += std::norm(h_hat(i)) * design.quant_noise(i);
  }
  for (int s : term.interference_streams) {
    cross += quad_form(h_hat, design.covariances[s]);
  }
  return self_error + cross;
}

double rate_lb(const RateTerm& term, const BeamDesign& design,
               const ChannelSet& channels, double noise_power) {
  const double s = signal_power(term, design, channels);
  const double denom =
      guarded_denominator(noise_power + interference_power(term, design, channels));
  return std::log1p(s / denom) / kLn2;
}

double surrogate_rate_lb(const RateTerm& term, const BeamDesign& design,
                         const BeamDesign& reference, const ChannelSet& channels,
                         double noise_power) {
  const double s = signal_power(term, design, channels);
  const double interf = interference_power(term, design, channels);
  const double interf_ref = interference_power(term, reference, channels);
  const double denom_ref = guarded_denominator(noise_power + interf_ref);
  const double total = guarded_denominator(noise_power + interf + s);
  return (std::log(total) - std::log(denom_ref) - (interf - interf_ref) / denom_ref) /
         kLn2;
}

double sinr_instant(const RateTerm& term, const BeamDesign& design,
                    const Eigen::VectorXcd& h_hat, const Eigen::VectorXcd& error,
                    double noise_power) {
  if (h_hat.size() != design.num_aps() || error.size() != design.num_aps()) {
    throw std::invalid_argument("channel realization dimension mismatch");
  }
  const Eigen::VectorXcd h = h_hat + error;
  const double s = quad_form(h_hat, design.covariances[term.signal_stream]);
  double denom = noise_power + quad_form(error, design.covariances[term.signal_stream]);
  for (int i = 0; i < design.num_aps(); ++i) {
    denom += std::norm(h(i)) * design.quant_noise(i);
  }
  for (int stream : term.interference_streams) {
    denom += quad_form(h, design.covariances[stream]);
  }
  return s / guarded_denominator(denom);
}

namespace {

RateTerm find_term(const std::vector<RateTerm>& terms, RateTerm::Lhs lhs,
                   int channel_ue, int signal_stream) {
  for (const auto& t : terms) {
    if (t.lhs == lhs && t.channel_ue == channel_ue && t.signal_stream == signal_stream) {
      return t;
    }
  }
  throw std::invalid_argument("no such rate term for this scheme");
}

}  // namespace

double sdma_rate_lb(int ue, const BeamDesign& design, const ChannelSet& channels,
                    double noise_power) {
  const auto terms = rate_terms(SchemeSpec::Sdma(channels.num_ues()));
  return rate_lb(terms.at(ue), design, channels, noise_power);
}

double sdma_sinr_instant(int ue, const BeamDesign& design,
                         const Eigen::VectorXcd& h_hat_ue,
                         const Eigen::VectorXcd& error_ue, double noise_power) {
  const int K = design.num_streams();
  RateTerm t;
  t.channel_ue = ue;
  t.signal_stream = ue;
  t.interference_streams = streams_except(K, ue);
  return sinr_instant(t, design, h_hat_ue, error_ue, noise_power);
}

namespace {

RateTerm noma_term(int decoder_pos, int stream_pos, const SchemeSpec& spec) {
  if (spec.kind != SchemeSpec::Kind::kNoma) {
    throw std::invalid_argument("spec is not NOMA");
  }
  const int K = spec.num_ues;
  if (stream_pos < 0 || decoder_pos < stream_pos || decoder_pos >= K) {
    throw std::invalid_argument("NOMA positions must satisfy 0 <= k <= l < K");
  }
  RateTerm t;
  t.channel_ue = spec.noma_order[decoder_pos];
  t.signal_stream = spec.noma_order[stream_pos];
  for (int m = stream_pos + 1; m < K; ++m) {
    t.interference_streams.push_back(spec.noma_order[m]);
  }
  t.self_error_streams = all_streams(K);
  return t;
}

}  // namespace

double noma_rate_lb(int decoder_pos, int stream_pos, const BeamDesign& design,
                    const ChannelSet& channels, const SchemeSpec& spec,
                    double noise_power) {
  return rate_lb(noma_term(decoder_pos, stream_pos, spec), design, channels,
                 noise_power);
}

double noma_sinr_instant(int decoder_pos, int stream_pos, const BeamDesign& design,
                         const Eigen::VectorXcd& h_hat_decoder,
                         const Eigen::VectorXcd& error_decoder,
                         const SchemeSpec& spec, double noise_power) {
  return sinr_instant(noma_term(decoder_pos, stream_pos, spec), design, h_hat_decoder,
                      error_decoder, noise_power);
}

double rsma_common_lb(int ue, int subset, const BeamDesign& design,
                      const ChannelSet& channels, const SchemeSpec& spec,
                      double noise_power) {
  if (!spec.subset_contains(subset, ue)) {
    throw std::invalid_argument("UE is not a member of this common-signal subset");
  }
  const auto terms = rate_terms(spec);
  return rate_lb(find_term(terms, RateTerm::Lhs::kCommonSum, ue,
                           spec.num_ues + subset),
                 design, channels, noise_power);
}

double rsma_private_lb(int ue, const BeamDesign& design, const ChannelSet& channels,
                       const SchemeSpec& spec, double noise_power) {
  const auto terms = rate_terms(spec);
  return rate_lb(find_term(terms, RateTerm::Lhs::kPrivate, ue, ue), design, channels,
                 noise_power);
}

double rsma_sinr_instant_common(int ue, int subset, const BeamDesign& design,
                                const Eigen::VectorXcd& h_hat_ue,
                                const Eigen::VectorXcd& error_ue,
                                const SchemeSpec& spec, double noise_power) {
  if (!spec.subset_contains(subset, ue)) {
    throw std::invalid_argument("UE is not a member of this common-signal subset");
  }
  const auto terms = rate_terms(spec);
  return sinr_instant(find_term(terms, RateTerm::Lhs::kCommonSum, ue,
                                spec.num_ues + subset),
                      design, h_hat_ue, error_ue, noise_power);
}

double rsma_sinr_instant_private(int ue, const BeamDesign& design,
                                 const Eigen::VectorXcd& h_hat_ue,
                                 const Eigen::VectorXcd& error_ue,
                                 const SchemeSpec& spec, double noise_power) {
  const auto terms = rate_terms(spec);
  return sinr_instant(find_term(terms, RateTerm::Lhs::kPrivate, ue, ue), design,
                      h_hat_ue, error_ue, noise_power);
}

}  // namespace cfrs
