#include "cfrs/scheme.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace cfrs {

SchemeSpec SchemeSpec::Sdma(int num_ues) {
  SchemeSpec spec;
  spec.kind = Kind::kSdma;
  spec.num_ues = num_ues;
  spec.validate();
  return spec;
}

SchemeSpec SchemeSpec::Noma(int num_ues, std::vector<int> order) {
  SchemeSpec spec;
  spec.kind = Kind::kNoma;
  spec.num_ues = num_ues;
  spec.noma_order = std::move(order);
  spec.validate();
  return spec;
}

SchemeSpec SchemeSpec::Rsma(int num_ues, std::vector<std::vector<int>> subsets) {
  SchemeSpec spec;
  spec.kind = Kind::kRsma;
  spec.num_ues = num_ues;
  spec.subsets = std::move(subsets);
  for (auto& s : spec.subsets) std::sort(s.begin(), s.end());
  // pi_k: subsets containing k by non-increasing cardinality, ties by index.
  spec.ue_orders.assign(num_ues, {});
  for (int k = 0; k < num_ues; ++k) {
    for (int l = 0; l < spec.num_common(); ++l) {
      if (spec.subset_contains(l, k)) spec.ue_orders[k].push_back(l);
    }
    std::stable_sort(spec.ue_orders[k].begin(), spec.ue_orders[k].end(),
                     [&](int a, int b) {
                       return spec.subsets[a].size() > spec.subsets[b].size();
                     });
  }
  spec.validate();
  return spec;
}

SchemeSpec SchemeSpec::RsmaSingleCommon(int num_ues) {
  if (num_ues < 2) {
    throw std::invalid_argument("RSMA with a shared common signal needs K >= 2");
  }
  std::vector<int> everyone(num_ues);
  std::iota(everyone.begin(), everyone.end(), 0);
  return Rsma(num_ues, {everyone});
}

bool SchemeSpec::subset_contains(int l, int ue) const {
  const auto& s = subsets[l];
  return std::binary_search(s.begin(), s.end(), ue);
}

std::vector<int> SchemeSpec::not_yet_decoded(int ue, int l) const {
  const auto& order = ue_orders[ue];
  const auto it = std::find(order.begin(), order.end(), l);
  if (it == order.end()) {
    throw std::invalid_argument("UE does not decode this common signal");
  }
  return std::vector<int>(it + 1, order.end());
}

void SchemeSpec::validate() const {
  if (num_ues < 1) throw std::invalid_argument("scheme needs at least one UE");
  switch (kind) {
    case Kind::kSdma:
      if (!noma_order.empty() || !subsets.empty()) {
        throw std::invalid_argument("SDMA spec must not carry orders or subsets");
      }
      break;
    case Kind::kNoma: {
      if (static_cast<int>(noma_order.size()) != num_ues) {
        throw std::invalid_argument("NOMA order must be a permutation of all UEs");
      }
      std::vector<bool> seen(num_ues, false);
      for (int ue : noma_order) {
        if (ue < 0 || ue >= num_ues || seen[ue]) {
          throw std::invalid_argument("NOMA order must be a bijection on UE indices");
        }
        seen[ue] = true;
      }
      break;
    }
    case Kind::kRsma: {
      std::set<std::vector<int>> distinct;
      for (const auto& s : subsets) {
        if (s.size() < 2) {
          throw std::invalid_argument("every RSMA subset must have >= 2 UEs");
        }
        if (!std::is_sorted(s.begin(), s.end()) ||
            std::adjacent_find(s.begin(), s.end()) != s.end()) {
          throw std::invalid_argument("RSMA subsets must be sorted and duplicate-free");
        }
        if (s.front() < 0 || s.back() >= num_ues) {
          throw std::invalid_argument("RSMA subset contains an out-of-range UE");
        }
        if (!distinct.insert(s).second) {
          throw std::invalid_argument("RSMA subsets must be pairwise distinct");
        }
      }
      if (static_cast<int>(ue_orders.size()) != num_ues) {
        throw std::invalid_argument("RSMA spec must carry one decode order per UE");
      }
      for (int k = 0; k < num_ues; ++k) {
        const auto& order = ue_orders[k];
        std::set<int> members;
        for (int l = 0; l < num_common(); ++l) {
          if (subset_contains(l, k)) members.insert(l);
        }
        if (members.size() != order.size() ||
            !std::all_of(order.begin(), order.end(),
                         [&](int l) { return members.count(l) > 0; })) {
          throw std::invalid_argument("UE decode order must cover exactly its subsets");
        }
        for (size_t q = 1; q < order.size(); ++q) {
          if (subsets[order[q - 1]].size() < subsets[order[q]].size()) {
            throw std::invalid_argument(
                "UE decode order must be non-increasing in subset cardinality");
          }
        }
      }
      break;
    }
  }
}

std::string SchemeSpec::name() const {
  switch (kind) {
    case Kind::kSdma:
      return "sdma";
    case Kind::kNoma:
      return "noma";
    case Kind::kRsma:
      return "rsma";
  }
  return "unknown";
}

}  // namespace cfrs
