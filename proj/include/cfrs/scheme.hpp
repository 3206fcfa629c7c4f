#pragma once

#include <string>
#include <vector>

namespace cfrs {

/**
 * Multiple-access scheme description.
 *
 * Stream layout convention used everywhere downstream: streams 0..K-1 are the
 * private streams (one per UE, in UE order); for RSMA, streams K..K+L-1 are
 * the common streams (one per subset, in subset order).
 */
struct SchemeSpec {
  enum class Kind { kSdma, kNoma, kRsma };

  Kind kind = Kind::kSdma;
  int num_ues = 0;

  // NOMA: noma_order[j] is the UE whose stream is decoded at stage j (pi).
  std::vector<int> noma_order;

  // RSMA: subsets[l] = S_l, each sorted ascending. May be empty (L = 0), in
  // which case the scheme degenerates to SDMA.
  std::vector<std::vector<int>> subsets;

  // RSMA: ue_orders[k] = pi_k, the subset indices containing UE k ordered by
  // non-increasing |S_l| (ties by ascending l). Decoded in this order, then
  // the private stream.
  std::vector<std::vector<int>> ue_orders;

  static SchemeSpec Sdma(int num_ues);
  static SchemeSpec Noma(int num_ues, std::vector<int> order);
  static SchemeSpec Rsma(int num_ues, std::vector<std::vector<int>> subsets);
  // Single common signal decoded by everyone (S_1 = K). Requires K >= 2.
  static SchemeSpec RsmaSingleCommon(int num_ues);

  int num_common() const { return static_cast<int>(subsets.size()); }
  int num_streams() const { return num_ues + num_common(); }
  bool subset_contains(int l, int ue) const;

  // Common signals UE k decodes, in decode order (pi_k).
  const std::vector<int>& decode_order(int ue) const { return ue_orders[ue]; }

  // Q_{k,l}: common signals UE k decodes after signal l (not yet cancelled
  // while decoding l). Requires k in S_l.
  std::vector<int> not_yet_decoded(int ue, int l) const;

  // Throws std::invalid_argument on any violated invariant.
  void validate() const;

  std::string name() const;
};

}  // namespace cfrs
