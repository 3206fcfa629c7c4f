#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cfrs/design.hpp"
#include "cfrs/model.hpp"
#include "cfrs/scheme.hpp"

namespace cfrs {

/**
 * One rate-bound constraint's ingredients, shared by the closed-form bounds,
 * the MM surrogate builder, and the Monte Carlo oracle.
 *
 * Closed-form bound:  f = log2(1 + S / (sigma^2 + I)) with
 *   S = h_hat^H V_sig h_hat,
 *   I = sum_i z_i (omega_i + sum_{s in self} V_s[i][i])
 *       + h_hat^H (Omega + sum_{s in interf} V_s) h_hat.
 * Instantaneous SINR for one error draw e (h = h_hat + e):
 *   gamma = S / (sigma^2 + e^H V_sig e + h^H (Omega + sum_{s in interf} V_s) h).
 */
struct RateTerm {
  enum class Lhs {
    kMinRate,    // bounds the scheme objective directly (SDMA/NOMA)
    kPrivate,    // bounds R_{p,k}; lhs_index = UE k
    kCommonSum,  // bounds sum_{k in S_l} R_{c,k,l}; lhs_index = subset l
  };

  int channel_ue = 0;
  int signal_stream = 0;
  std::vector<int> interference_streams;
  std::vector<int> self_error_streams;
  Lhs lhs = Lhs::kMinRate;
  int lhs_index = 0;
};

// The scheme's full list of rate constraints. SDMA: one per UE. NOMA: one per
// (stream position k, decoder position l >= k). RSMA: one per (subset l,
// member k') plus one private term per UE.
std::vector<RateTerm> rate_terms(const SchemeSpec& spec);

// Re(h^H V h), clamped at zero for round-off on PSD inputs.
double quad_form(const Eigen::VectorXcd& h, const Eigen::MatrixXcd& v);

// The interference part I of a term's bound denominator (everything except
// sigma^2), evaluated at a concrete design.
double interference_power(const RateTerm& term, const BeamDesign& design,
                          const ChannelSet& channels);

// Signal power S of a term.
double signal_power(const RateTerm& term, const BeamDesign& design,
                    const ChannelSet& channels);

// Closed-form Jensen lower bound for one term, bits/s/Hz.
double rate_lb(const RateTerm& term, const BeamDesign& design,
               const ChannelSet& channels, double noise_power);

// MM surrogate of rate_lb linearized at reference (bits/s/Hz): equals rate_lb
// at the reference design and minorizes it elsewhere.
double surrogate_rate_lb(const RateTerm& term, const BeamDesign& design,
                         const BeamDesign& reference, const ChannelSet& channels,
                         double noise_power);

// Instantaneous SINR for one CSI-error realization of the term's UE.
double sinr_instant(const RateTerm& term, const BeamDesign& design,
                    const Eigen::VectorXcd& h_hat, const Eigen::VectorXcd& error,
                    double noise_power);

// Per-operation wrappers in the schemes' own indexing. Positions are 0-based.
double sdma_rate_lb(int ue, const BeamDesign& design, const ChannelSet& channels,
                    double noise_power);
double sdma_sinr_instant(int ue, const BeamDesign& design,
                         const Eigen::VectorXcd& h_hat_ue,
                         const Eigen::VectorXcd& error_ue, double noise_power);

// NOMA: decoder position l and stream position k in the decode order pi,
// with 0 <= k <= l < K. Rate of UE pi(k) is min over l in [k, K).
double noma_rate_lb(int decoder_pos, int stream_pos, const BeamDesign& design,
                    const ChannelSet& channels, const SchemeSpec& spec,
                    double noise_power);
double noma_sinr_instant(int decoder_pos, int stream_pos, const BeamDesign& design,
                         const Eigen::VectorXcd& h_hat_decoder,
                         const Eigen::VectorXcd& error_decoder,
                         const SchemeSpec& spec, double noise_power);

// RSMA: common-signal bound for UE k in S_l, and private bound for UE k.
double rsma_common_lb(int ue, int subset, const BeamDesign& design,
                      const ChannelSet& channels, const SchemeSpec& spec,
                      double noise_power);
double rsma_private_lb(int ue, const BeamDesign& design, const ChannelSet& channels,
                       const SchemeSpec& spec, double noise_power);
double rsma_sinr_instant_common(int ue, int subset, const BeamDesign& design,
                                const Eigen::VectorXcd& h_hat_ue,
                                const Eigen::VectorXcd& error_ue,
                                const SchemeSpec& spec, double noise_power);
double rsma_sinr_instant_private(int ue, const BeamDesign& design,
                                 const Eigen::VectorXcd& h_hat_ue,
                                 const Eigen::VectorXcd& error_ue,
                                 const SchemeSpec& spec, double noise_power);

}  // namespace cfrs
