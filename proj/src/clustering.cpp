#include "cfrs/clustering.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace cfrs {

double dissimilarity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("dissimilarity undefined for a zero channel vector");
  }
  const double value = 1.0 - std::abs(a.dot(b)) / (na * nb);
  return std::clamp(value, 0.0, 1.0);
}

Eigen::MatrixXd dissimilarity_matrix(const Eigen::MatrixXcd& estimated) {
  const int K = static_cast<int>(estimated.rows());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXcd hk = estimated.row(k).transpose();
    for (int m = k + 1; m < K; ++m) {
      const Eigen::VectorXcd hm = estimated.row(m).transpose();
      const double value = (hk.norm() == 0.0 || hm.norm() == 0.0)
                               ? 1.0
                               : dissimilarity(hk, hm);
      d(k, m) = value;
      d(m, k) = value;
    }
  }
  return d;
}

double complete_linkage(const std::vector<int>& set_a, const std::vector<int>& set_b,
                        const Eigen::MatrixXd& dissimilarities) {
  if (set_a.empty() || set_b.empty()) {
    throw std::invalid_argument("complete linkage needs nonempty sets");
  }
  for (int k : set_a) {
    if (std::find(set_b.begin(), set_b.end(), k) != set_b.end()) {
      throw std::invalid_argument("complete linkage needs disjoint sets");
    }
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (int k : set_a) {
    for (int m : set_b) {
      worst = std::max(worst, dissimilarities(k, m));
    }
  }
  return worst;
}

Dendrogram agglomerate(const Eigen::MatrixXd& dissimilarities) {
  const int K = static_cast<int>(dissimilarities.rows());
  if (K < 2) throw std::invalid_argument("agglomeration needs at least two UEs");

  std::vector<std::vector<int>> clusters(K);
  for (int k = 0; k < K; ++k) clusters[k] = {k};
  std::vector<int> active(K);
  for (int k = 0; k < K; ++k) active[k] = k;

  Dendrogram dendrogram;
  while (active.size() > 1) {
    int best_a = -1;
    int best_b = -1;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < active.size(); ++i) {
      for (size_t j = i + 1; j < active.size(); ++j) {
        const double d =
            complete_linkage(clusters[active[i]], clusters[active[j]], dissimilarities);
        if (d < best) {  // strict: ties keep the lowest (k1, k2) pair
          best = d;
          best_a = static_cast<int>(i);
          best_b = static_cast<int>(j);
        }
      }
    }
    const int ka = active[best_a];
    const int kb = active[best_b];
    Dendrogram::Merge merge;
    merge.left = clusters[ka];
    merge.right = clusters[kb];
    merge.distance = best;
    clusters[ka].insert(clusters[ka].end(), clusters[kb].begin(), clusters[kb].end());
    std::sort(clusters[ka].begin(), clusters[ka].end());
    merge.merged = clusters[ka];
    dendrogram.merges.push_back(std::move(merge));
    active.erase(active.begin() + best_b);
  }
  return dendrogram;
}

SchemeSpec cluster_subsets(const ChannelSet& channels) {
  const int K = channels.num_ues();
  if (K < 2) {
    throw std::invalid_argument("RSMA clustering needs K >= 2 (use SDMA for K = 1)");
  }
  const Dendrogram dendrogram = agglomerate(dissimilarity_matrix(channels.estimated));
  std::vector<std::vector<int>> subsets;
  subsets.reserve(dendrogram.merges.size());
  for (const auto& merge : dendrogram.merges) {
    subsets.push_back(merge.merged);
  }
  return SchemeSpec::Rsma(K, std::move(subsets));
}

}  // namespace cfrs
