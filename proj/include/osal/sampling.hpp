#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "osal/error.hpp"
#include "osal/features.hpp"
#include "osal/kmeans.hpp"

namespace osal {

struct AnnotationSelection {
  int budget = 0;
  int k = 0;
  std::uint64_t assignment_seed = 0;  // seed of the clustering the selection was drawn from
  // Per cluster, in selection order (medoid first).
  std::vector<std::vector<std::size_t>> per_cluster_indices;
  std::vector<std::vector<std::string>> per_cluster_ids;

  int per_cluster_count() const { return k == 0 ? 0 : budget / k; }

  friend bool operator==(const AnnotationSelection&, const AnnotationSelection&) = default;
};

namespace detail {

inline std::vector<std::size_t> sorted_members(const DistanceMatrix& dm, std::span<const std::size_t> members) {
  std::vector<std::size_t> out(members.begin(), members.end());
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) throw invalid_argument("duplicate member index");
  if (!out.empty() && out.back() >= dm.n())
    throw invalid_argument("member index " + std::to_string(out.back()) + " out of range");
  return out;
}

}  // namespace detail

// Member minimizing the summed distance to all other members; ties go to the lowest index.
inline std::size_t medoid(const DistanceMatrix& dm, std::span<const std::size_t> members) {
  if (members.empty()) throw invalid_argument("medoid of an empty member set");
  const auto sorted = detail::sorted_members(dm, members);
  std::size_t best = sorted[0];
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t i : sorted) {
    double sum = 0.0;
    for (std::size_t j : sorted) sum += dm(i, j);
    if (sum < best_sum) {
      best_sum = sum;
      best = i;
    }
  }
  return best;
}

// Greedy max-min selection starting from the medoid: every further pick maximizes its distance
// to the nearest already-picked member. Ties go to the lowest index. Picks are returned in
// selection order.
inline std::vector<std::size_t> farthest_point_sample(const DistanceMatrix& dm, std::span<const std::size_t> members,
                                                      int count) {
  if (count < 1) throw invalid_argument("count must be >= 1");
  if (static_cast<std::size_t>(count) > members.size())
    throw invalid_argument("count " + std::to_string(count) + " exceeds member count " + std::to_string(members.size()));
  const auto sorted = detail::sorted_members(dm, members);
  const std::size_t m = sorted.size();

  std::vector<std::size_t> picks;
  picks.reserve(static_cast<std::size_t>(count));
  const std::size_t first = medoid(dm, sorted);
  picks.push_back(first);

  std::vector<char> taken(m, 0);
  std::vector<double> nearest(m);
  for (std::size_t p = 0; p < m; ++p) {
    nearest[p] = dm(sorted[p], first);
    if (sorted[p] == first) taken[p] = 1;
  }
  while (picks.size() < static_cast<std::size_t>(count)) {
    std::size_t best = m;
    for (std::size_t p = 0; p < m; ++p) {
      if (taken[p]) continue;
      if (best == m || nearest[p] > nearest[best]) best = p;
    }
    taken[best] = 1;
    const std::size_t chosen = sorted[best];
    picks.push_back(chosen);
    for (std::size_t p = 0; p < m; ++p) nearest[p] = std::min(nearest[p], static_cast<double>(dm(sorted[p], chosen)));
  }
  return picks;
}

// Largest distance from any member to its nearest selected sample.
inline double covering_radius(const DistanceMatrix& dm, std::span<const std::size_t> members,
                              std::span<const std::size_t> selected) {
  if (selected.empty()) throw invalid_argument("covering radius of an empty selection");
  double radius = 0.0;
  for (std::size_t i : members) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t s : selected) nearest = std::min(nearest, static_cast<double>(dm(i, s)));
    radius = std::max(radius, nearest);
  }
  return radius;
}

// Splits the budget evenly over the clusters and runs farthest-point sampling in each.
inline AnnotationSelection select_annotation_set(const DistanceMatrix& dm, const ClusterAssignment& ca, int budget,
                                                 const std::vector<std::string>& ids) {
  if (ca.labels.size() != dm.n()) throw invalid_argument("assignment does not match the distance matrix");
  if (ids.size() != dm.n()) throw invalid_argument("id count does not match the distance matrix");
  if (ca.k < 1) throw invalid_argument("assignment has no clusters");
  if (budget < ca.k)
    throw invalid_argument("budget " + std::to_string(budget) + " is smaller than the cluster count " +
                           std::to_string(ca.k));
  if (budget % ca.k != 0)
    throw divisibility_error("budget " + std::to_string(budget) + " is not divisible by K=" + std::to_string(ca.k));

  const int per = budget / ca.k;
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(ca.k));
  for (std::size_t i = 0; i < ca.labels.size(); ++i) {
    const int l = ca.labels[i];
    if (l < 0 || l >= ca.k) throw invalid_argument("label " + std::to_string(l) + " outside [0, K)");
    members[static_cast<std::size_t>(l)].push_back(i);
  }
  for (int c = 0; c < ca.k; ++c) {
    const auto size = members[static_cast<std::size_t>(c)].size();
    if (size < static_cast<std::size_t>(per)) throw cluster_too_small_error(c, size, static_cast<std::size_t>(per));
  }

  AnnotationSelection sel;
  sel.budget = budget;
  sel.k = ca.k;
  sel.assignment_seed = ca.seed;
  for (int c = 0; c < ca.k; ++c) {
    auto picks = farthest_point_sample(dm, members[static_cast<std::size_t>(c)], per);
    std::vector<std::string> picked_ids;
    picked_ids.reserve(picks.size());
    for (std::size_t i : picks) picked_ids.push_back(ids[i]);
    sel.per_cluster_indices.push_back(std::move(picks));
    sel.per_cluster_ids.push_back(std::move(picked_ids));
  }
  return sel;
}

}  // namespace osal
