#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cfrs/model.hpp"
#include "cfrs/scheme.hpp"

namespace cfrs {

struct Dendrogram {
  struct Merge {
    std::vector<int> left;
    std::vector<int> right;
    std::vector<int> merged;
    double distance = 0.0;
  };
  // Exactly K-1 merges; the last merged set is the full UE set.
  std::vector<Merge> merges;
};

// 1 - |a^H b| / (||a|| ||b||), in [0, 1]. Throws on a zero vector.
double dissimilarity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

// Pairwise dissimilarities of the estimated channel rows. A UE with a zero
// estimated channel is assigned dissimilarity 1 against every other UE (it
// carries no directional information); the diagonal is 0.
Eigen::MatrixXd dissimilarity_matrix(const Eigen::MatrixXcd& estimated);

// Complete linkage: max over cross pairs. Sets must be disjoint and nonempty.
double complete_linkage(const std::vector<int>& set_a, const std::vector<int>& set_b,
                        const Eigen::MatrixXd& dissimilarities);

// Bottom-up agglomeration with complete linkage. Argmin ties go to the lowest
// (k1, k2) pair, so identical inputs give identical dendrograms.
Dendrogram agglomerate(const Eigen::MatrixXd& dissimilarities);

// The K-1 common-signal subsets for RSMA from the estimated channels.
// Requires K >= 2.
SchemeSpec cluster_subsets(const ChannelSet& channels);

}  // namespace cfrs
