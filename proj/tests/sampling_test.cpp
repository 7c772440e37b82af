#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "osal/sampling.hpp"
#include "osal/synthetic.hpp"

namespace {

using Index = std::vector<std::size_t>;

osal::DistanceMatrix line(const std::vector<float>& xs) {
  return osal::pairwise_distances(osal::FeatureMatrix(xs.size(), 1, xs));
}

Index all(std::size_t n) {
  Index v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

osal::FeatureMatrix random_points(std::mt19937_64& gen, std::size_t n, std::size_t d) {
  std::normal_distribution<float> nd;
  std::vector<float> v(n * d);
  for (auto& x : v) x = nd(gen);
  return osal::FeatureMatrix(n, d, std::move(v));
}

// Re-evaluates every candidate's minimum distance to the picked set from scratch each round.
Index fps_oracle(const osal::DistanceMatrix& dm, const Index& members, int count) {
  std::size_t first = members[0];
  double first_sum = INFINITY;
  for (std::size_t i : members) {
    double s = 0;
    for (std::size_t j : members) s += dm(i, j);
    if (s < first_sum || (s == first_sum && i < first)) first_sum = s, first = i;
  }
  Index picks{first};
  while (picks.size() < static_cast<std::size_t>(count)) {
    std::size_t best = 0;
    double best_d = -1;
    for (std::size_t i : members) {
      if (std::find(picks.begin(), picks.end(), i) != picks.end()) continue;
      double m = INFINITY;
      for (std::size_t p : picks) m = std::min(m, static_cast<double>(dm(i, p)));
      if (m > best_d || (m == best_d && i < best)) best_d = m, best = i;
    }
    picks.push_back(best);
  }
  return picks;
}

double optimal_k_center(const osal::DistanceMatrix& dm, const Index& members, int c) {
  std::vector<char> mask(members.size(), 0);
  std::fill(mask.begin(), mask.begin() + c, 1);
  double best = INFINITY;
  do {
    Index chosen;
    for (std::size_t i = 0; i < members.size(); ++i)
      if (mask[i]) chosen.push_back(members[i]);
    best = std::min(best, osal::covering_radius(dm, members, chosen));
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

osal::ClusterAssignment assignment(std::vector<int> labels, int k) {
  osal::ClusterAssignment ca;
  ca.k = k;
  ca.seed = 17;
  ca.labels = std::move(labels);
  return ca;
}

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back("s" + std::to_string(i));
  return v;
}

}  // namespace

TEST(Medoid, Examples) {
  const auto dm = line({0, 1, 2, 3, 4});
  EXPECT_EQ(osal::medoid(dm, all(5)), 2u);
  EXPECT_EQ(osal::medoid(dm, Index{3}), 3u);
  EXPECT_EQ(osal::medoid(dm, Index{4, 1}), 1u);
  EXPECT_THROW(osal::medoid(dm, Index{}), osal::invalid_argument);
  EXPECT_THROW(osal::medoid(dm, Index{7}), osal::invalid_argument);
}

TEST(FarthestPoint, LineExample) {
  const auto dm = line({0, 1, 2, 3, 4});
  EXPECT_EQ(fps_oracle(dm, all(5), 3), (Index{2, 0, 4}));
  EXPECT_EQ(osal::farthest_point_sample(dm, all(5), 3), (Index{2, 0, 4}));
}

TEST(FarthestPoint, FullCountReturnsEveryMemberMedoidFirst) {
  const auto dm = line({5, 0, 9, 1, 7});
  const Index members{0, 1, 2, 3, 4};
  const auto picks = osal::farthest_point_sample(dm, members, 5);
  EXPECT_EQ(picks.front(), osal::medoid(dm, members));
  EXPECT_EQ(std::set<std::size_t>(picks.begin(), picks.end()).size(), 5u);
}

TEST(FarthestPoint, MatchesOracleOnRandomClusters) {
  std::mt19937_64 gen(15);
  for (int t = 0; t < 50; ++t) {
    const auto f = random_points(gen, 15, 2);
    const auto dm = osal::pairwise_distances(f);
    EXPECT_EQ(osal::farthest_point_sample(dm, all(15), 4), fps_oracle(dm, all(15), 4));
  }
}

TEST(FarthestPoint, SubsetMembersAndOrderIndependence) {
  std::mt19937_64 gen(3);
  const auto dm = osal::pairwise_distances(random_points(gen, 30, 3));
  const Index members{29, 3, 17, 8, 11, 20, 5};
  Index sorted = members;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(osal::farthest_point_sample(dm, members, 4), fps_oracle(dm, sorted, 4));
  EXPECT_EQ(osal::farthest_point_sample(dm, members, 4), osal::farthest_point_sample(dm, sorted, 4));
}

TEST(FarthestPoint, PrefixProperty) {
  std::mt19937_64 gen(4);
  const auto dm = osal::pairwise_distances(random_points(gen, 40, 4));
  const auto full = osal::farthest_point_sample(dm, all(40), 12);
  for (int m = 1; m < 12; ++m) {
    const auto part = osal::farthest_point_sample(dm, all(40), m);
    EXPECT_TRUE(std::equal(part.begin(), part.end(), full.begin())) << m;
  }
}

TEST(FarthestPoint, WithinTwiceOptimalCoveringRadius) {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 40; ++t) {
    const std::size_t m = 3 + gen() % 10;
    const int c = 1 + static_cast<int>(gen() % std::min<std::size_t>(m, 5));
    const auto dm = osal::pairwise_distances(random_points(gen, m, 2));
    const auto picks = osal::farthest_point_sample(dm, all(m), c);
    EXPECT_LE(osal::covering_radius(dm, all(m), picks), 2.0 * optimal_k_center(dm, all(m), c));
  }
}

TEST(FarthestPoint, MoreDiverseThanRandomSubsets) {
  std::mt19937_64 gen(21);
  int dominated = 0;
  for (int t = 0; t < 100; ++t) {
    const auto dm = osal::pairwise_distances(random_points(gen, 200, 8));
    const double fps = osal::covering_radius(dm, all(200), osal::farthest_point_sample(dm, all(200), 10));
    std::vector<double> random_radii;
    for (int r = 0; r < 100; ++r) {
      Index idx = all(200);
      std::shuffle(idx.begin(), idx.end(), gen);
      idx.resize(10);
      random_radii.push_back(osal::covering_radius(dm, all(200), idx));
    }
    std::nth_element(random_radii.begin(), random_radii.begin() + 50, random_radii.end());
    if (fps <= random_radii[50]) ++dominated;
  }
  EXPECT_GE(dominated, 95);
}

TEST(FarthestPoint, Errors) {
  const auto dm = line({0, 1, 2});
  EXPECT_THROW(osal::farthest_point_sample(dm, all(3), 4), osal::invalid_argument);
  EXPECT_THROW(osal::farthest_point_sample(dm, all(3), 0), osal::invalid_argument);
  EXPECT_THROW(osal::farthest_point_sample(dm, Index{0, 0, 1}, 2), osal::invalid_argument);
}

TEST(AnnotationSet, SevenClustersBudget56) {
  const auto g = osal::generate_synthetic({.k_true = 7, .n_per_cluster = 20, .d = 4, .separation = 10, .spread = 1, .seed = 6});
  const auto dm = osal::pairwise_distances(g.features);
  const auto ca = assignment(g.true_labels, 7);
  const auto sel = osal::select_annotation_set(dm, ca, 56, g.features.ids());
  EXPECT_EQ(sel.per_cluster_count(), 8);
  EXPECT_EQ(sel.assignment_seed, 17u);
  std::set<std::size_t> seen;
  for (int c = 0; c < 7; ++c) {
    const auto& picks = sel.per_cluster_indices[static_cast<std::size_t>(c)];
    ASSERT_EQ(picks.size(), 8u);
    Index members;
    for (std::size_t i = 0; i < ca.labels.size(); ++i)
      if (ca.labels[i] == c) members.push_back(i);
    EXPECT_EQ(picks.front(), osal::medoid(dm, members));
    for (std::size_t j = 0; j < picks.size(); ++j) {
      EXPECT_EQ(ca.labels[picks[j]], c);
      EXPECT_EQ(sel.per_cluster_ids[static_cast<std::size_t>(c)][j], g.features.id(picks[j]));
      seen.insert(picks[j]);
    }
  }
  EXPECT_EQ(seen.size(), 56u);
  EXPECT_EQ(osal::select_annotation_set(dm, ca, 56, g.features.ids()), sel);
}

TEST(AnnotationSet, ExhaustiveWhenBudgetEqualsData) {
  const auto dm = line({0, 1, 2, 10, 11, 12});
  const auto sel = osal::select_annotation_set(dm, assignment({0, 0, 0, 1, 1, 1}, 2), 6, names(6));
  EXPECT_EQ(sel.per_cluster_indices[0], (Index{1, 0, 2}));
  EXPECT_EQ(sel.per_cluster_indices[1], (Index{4, 3, 5}));
}

TEST(AnnotationSet, BudgetErrors) {
  const auto dm = line({0, 1, 2, 10, 11, 12, 20});
  const auto ca = assignment({0, 0, 0, 1, 1, 1, 2}, 3);
  EXPECT_THROW(osal::select_annotation_set(dm, ca, 2, names(7)), osal::invalid_argument);
  EXPECT_THROW(osal::select_annotation_set(dm, ca, 5, names(7)), osal::divisibility_error);
  try {
    osal::select_annotation_set(dm, ca, 6, names(7));
    FAIL();
  } catch (const osal::cluster_too_small_error& e) {
    EXPECT_EQ(e.cluster(), 2);
    EXPECT_NE(std::string(e.what()).find("cluster 2"), std::string::npos) << e.what();
  }
}

TEST(AnnotationSet, FiftyFiveOverSevenIsNotDivisible) {
  const auto g = osal::generate_synthetic({.k_true = 7, .n_per_cluster = 10, .d = 2, .separation = 10, .spread = 1, .seed = 1});
  const auto dm = osal::pairwise_distances(g.features);
  EXPECT_THROW(osal::select_annotation_set(dm, assignment(g.true_labels, 7), 55, g.features.ids()),
               osal::divisibility_error);
}
