#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "cfrs/clustering.hpp"
#include "test_helpers.hpp"

using namespace cfrs;
using cfrs::test::random_channels;

namespace {

// Laminar family: any two sets are nested or disjoint.
bool laminar(const std::vector<std::vector<int>>& sets) {
  for (size_t a = 0; a < sets.size(); ++a) {
    for (size_t b = a + 1; b < sets.size(); ++b) {
      std::vector<int> inter;
      std::set_intersection(sets[a].begin(), sets[a].end(), sets[b].begin(),
                            sets[b].end(), std::back_inserter(inter));
      if (inter.empty()) continue;
      const bool a_in_b = std::includes(sets[b].begin(), sets[b].end(),
                                        sets[a].begin(), sets[a].end());
      const bool b_in_a = std::includes(sets[a].begin(), sets[a].end(),
                                        sets[b].begin(), sets[b].end());
      if (!a_in_b && !b_in_a) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("dissimilarity endpoints and a frozen value") {
  Eigen::VectorXcd a(2);
  a << std::complex<double>(1.0, 0.0), std::complex<double>(0.0, 0.0);

  // Any complex rescaling of the same direction is at distance 0.
  const Eigen::VectorXcd aligned = std::complex<double>(0.3, -1.7) * a;
  CHECK(dissimilarity(a, aligned) <= 1e-12);

  Eigen::VectorXcd orth(2);
  orth << std::complex<double>(0.0, 0.0), std::complex<double>(2.0, 1.0);
  CHECK(std::abs(dissimilarity(a, orth) - 1.0) <= 1e-12);

  Eigen::VectorXcd diag(2);
  diag << std::complex<double>(1.0, 0.0), std::complex<double>(1.0, 0.0);
  diag /= std::sqrt(2.0);
  CHECK(dissimilarity(a, diag) ==
        doctest::Approx(0.29289321881345254).epsilon(1e-12));

  CHECK_THROWS_AS(dissimilarity(a, Eigen::VectorXcd::Zero(2)), std::invalid_argument);
}

TEST_CASE("complete linkage: singletons, max property, brute force") {
  Eigen::MatrixXd d(4, 4);
  d << 0.0, 0.1, 0.7, 0.4,  //
      0.1, 0.0, 0.3, 0.9,   //
      0.7, 0.3, 0.0, 0.2,   //
      0.4, 0.9, 0.2, 0.0;

  CHECK(complete_linkage({0}, {2}, d) == 0.7);

  const std::vector<int> sa = {0, 1};
  const std::vector<int> sb = {2, 3};
  const double linkage = complete_linkage(sa, sb, d);
  double brute = 0.0;
  for (int k : sa) {
    for (int m : sb) brute = std::max(brute, d(k, m));
  }
  CHECK(linkage == brute);
  for (int k : sa) {
    for (int m : sb) CHECK(linkage >= d(k, m));
  }

  CHECK_THROWS_AS(complete_linkage({0, 1}, {1, 2}, d), std::invalid_argument);
  CHECK_THROWS_AS(complete_linkage({}, {1}, d), std::invalid_argument);
}

TEST_CASE("two UEs merge into the single pair subset") {
  RandomStream rng(21);
  const ChannelSet channels = random_channels(2, 3, 0.2, rng);
  const SchemeSpec spec = cluster_subsets(channels);
  REQUIRE(spec.num_common() == 1);
  CHECK(spec.subsets[0] == std::vector<int>{0, 1});
}

TEST_CASE("three UEs: hand-traced merge order") {
  // D(0,1) < D(0,2) < D(1,2) so the first merge is {0,1}, then the full set.
  ChannelSet channels;
  channels.estimated.resize(3, 2);
  channels.estimated.row(0) << std::complex<double>(1.0, 0.0),
      std::complex<double>(0.0, 0.0);
  channels.estimated.row(1) << std::complex<double>(1.0, 0.0),
      std::complex<double>(0.1, 0.0);
  channels.estimated.row(2) << std::complex<double>(0.3, 0.0),
      std::complex<double>(-0.95, 0.0);
  channels.error_variance = Eigen::MatrixXd::Zero(3, 2);

  const Eigen::MatrixXd d = dissimilarity_matrix(channels.estimated);
  REQUIRE(d(0, 1) < d(0, 2));
  REQUIRE(d(0, 2) < d(1, 2));

  const SchemeSpec spec = cluster_subsets(channels);
  REQUIRE(spec.num_common() == 2);
  CHECK(spec.subsets[0] == std::vector<int>{0, 1});
  CHECK(spec.subsets[1] == std::vector<int>{0, 1, 2});
}

TEST_CASE("clustering contract over random channel sets") {
  RandomStream rng(22);
  for (int rep = 0; rep < 200; ++rep) {
    const int k = 2 + static_cast<int>(rng.uniform() * 7);  // 2..8
    const ChannelSet channels = random_channels(k, 3, 0.3, rng);
    const SchemeSpec spec = cluster_subsets(channels);

    REQUIRE(spec.num_common() == k - 1);
    std::set<std::vector<int>> distinct;
    for (const auto& s : spec.subsets) {
      CHECK(s.size() >= 2);
      CHECK(distinct.insert(s).second);
    }
    std::vector<int> full(k);
    std::iota(full.begin(), full.end(), 0);
    CHECK(spec.subsets.back() == full);
    CHECK(laminar(spec.subsets));

    // pi_k sorted by non-increasing cardinality.
    for (int ue = 0; ue < k; ++ue) {
      const auto& order = spec.decode_order(ue);
      for (size_t q = 1; q < order.size(); ++q) {
        CHECK(spec.subsets[order[q - 1]].size() >= spec.subsets[order[q]].size());
      }
    }
  }
}

TEST_CASE("dendrogram merges strictly grow clusters") {
  RandomStream rng(23);
  const ChannelSet channels = random_channels(6, 3, 0.2, rng);
  const Dendrogram dendrogram = agglomerate(dissimilarity_matrix(channels.estimated));
  REQUIRE(dendrogram.merges.size() == 5);
  for (const auto& merge : dendrogram.merges) {
    CHECK(merge.merged.size() == merge.left.size() + merge.right.size());
    CHECK(merge.merged.size() > merge.left.size());
    CHECK(merge.merged.size() > merge.right.size());
  }
  CHECK(dendrogram.merges.back().merged.size() == 6);
}

TEST_CASE("identical channels give identical subsets, including ties") {
  RandomStream rng(24);
  const ChannelSet channels = random_channels(5, 2, 0.0, rng);
  const SchemeSpec a = cluster_subsets(channels);
  const SchemeSpec b = cluster_subsets(channels);
  CHECK(a.subsets == b.subsets);
  CHECK(a.ue_orders == b.ue_orders);
}

TEST_CASE("all-zero channels cluster deterministically by index") {
  // rho_z = 1: every dissimilarity is 1, ties break lexicographically.
  ChannelSet channels;
  channels.estimated = Eigen::MatrixXcd::Zero(4, 2);
  channels.error_variance = Eigen::MatrixXd::Ones(4, 2);
  const SchemeSpec spec = cluster_subsets(channels);
  REQUIRE(spec.num_common() == 3);
  CHECK(spec.subsets[0] == std::vector<int>{0, 1});
  CHECK(spec.subsets[1] == std::vector<int>{0, 1, 2});
  CHECK(spec.subsets[2] == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("clustering rejects K < 2") {
  RandomStream rng(25);
  const ChannelSet channels = random_channels(1, 2, 0.2, rng);
  CHECK_THROWS_AS(cluster_subsets(channels), std::invalid_argument);
}
