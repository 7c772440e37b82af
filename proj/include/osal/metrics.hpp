#pragma once

// Partition-comparison and cluster-quality metrics.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "osal/error.hpp"
#include "osal/features.hpp"

namespace osal {

namespace detail {

// Relabels arbitrary integer labels to 0..m-1 in order of first appearance.
inline std::vector<int> dense_labels(std::span<const int> labels, int& distinct) {
  std::vector<int> keys(labels.begin(), labels.end());
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<int> rank(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    rank[i] = static_cast<int>(std::lower_bound(keys.begin(), keys.end(), labels[i]) - keys.begin());
  // first-appearance order
  std::vector<int> remap(keys.size(), -1);
  int next = 0;
  for (int& r : rank) {
    if (remap[static_cast<std::size_t>(r)] < 0) remap[static_cast<std::size_t>(r)] = next++;
    r = remap[static_cast<std::size_t>(r)];
  }
  distinct = next;
  return rank;
}

constexpr std::int64_t pairs(std::int64_t m) noexcept { return m * (m - 1) / 2; }

// Pair counts derived from the contingency table of two labelings.
struct PairCounts {
  std::int64_t total = 0;       // C(n,2)
  std::int64_t both = 0;        // sum_ij C(n_ij,2): co-clustered in both
  std::int64_t same_a = 0;      // sum_i C(a_i,2)
  std::int64_t same_b = 0;      // sum_j C(b_j,2)
};

inline PairCounts pair_counts(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    throw invalid_argument("labelings differ in length: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  if (a.size() < 2) throw invalid_argument("need at least 2 samples to compare labelings");
  int ka = 0;
  int kb = 0;
  const auto da = dense_labels(a, ka);
  const auto db = dense_labels(b, kb);
  std::vector<std::int64_t> table(static_cast<std::size_t>(ka) * static_cast<std::size_t>(kb), 0);
  std::vector<std::int64_t> rows(static_cast<std::size_t>(ka), 0);
  std::vector<std::int64_t> cols(static_cast<std::size_t>(kb), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++table[static_cast<std::size_t>(da[i]) * static_cast<std::size_t>(kb) + static_cast<std::size_t>(db[i])];
    ++rows[static_cast<std::size_t>(da[i])];
    ++cols[static_cast<std::size_t>(db[i])];
  }
  PairCounts pc;
  pc.total = pairs(static_cast<std::int64_t>(a.size()));
  for (auto v : table) pc.both += pairs(v);
  for (auto v : rows) pc.same_a += pairs(v);
  for (auto v : cols) pc.same_b += pairs(v);
  return pc;
}

}  // namespace detail

// Fraction of sample pairs on which the two partitions agree (together in both, or apart in both).
inline double rand_index(std::span<const int> a, std::span<const int> b) {
  const auto pc = detail::pair_counts(a, b);
  const std::int64_t agree = pc.total - pc.same_a - pc.same_b + 2 * pc.both;
  return static_cast<double>(agree) / static_cast<double>(pc.total);
}

// Hubert-Arabie adjusted Rand index. When the denominator vanishes (both partitions all
// singletons, or both a single cluster) the partitions coincide and 1.0 is returned.
inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  const auto pc = detail::pair_counts(a, b);
  const auto sa = static_cast<double>(pc.same_a);
  const auto sb = static_cast<double>(pc.same_b);
  const double expected = sa * sb / static_cast<double>(pc.total);
  const double max_index = 0.5 * (sa + sb);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (static_cast<double>(pc.both) - expected) / denom;
}

// Mean silhouette coefficient over all samples. Samples in singleton clusters score 0, as do
// samples whose intra- and nearest-cluster mean distances are both 0.
inline double silhouette(const DistanceMatrix& dm, std::span<const int> labels) {
  const std::size_t n = dm.n();
  if (labels.size() != n)
    throw invalid_argument("label count " + std::to_string(labels.size()) + " does not match distance matrix size " +
                           std::to_string(n));
  int k = 0;
  const auto lab = detail::dense_labels(labels, k);
  if (k < 2) throw invalid_argument("silhouette needs at least 2 distinct labels");
  const auto ku = static_cast<std::size_t>(k);

  std::vector<std::size_t> sizes(ku, 0);
  for (int l : lab) ++sizes[static_cast<std::size_t>(l)];

  // Four interleaved accumulator banks break the add dependency chain when neighbouring
  // samples share a label.
  std::vector<double> acc(4 * ku);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(lab[i]);
    if (sizes[own] < 2) continue;
    std::fill(acc.begin(), acc.end(), 0.0);
    const float* row = dm.row(i).data();
    const int* l = lab.data();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      acc[static_cast<std::size_t>(l[j])] += row[j];
      acc[ku + static_cast<std::size_t>(l[j + 1])] += row[j + 1];
      acc[2 * ku + static_cast<std::size_t>(l[j + 2])] += row[j + 2];
      acc[3 * ku + static_cast<std::size_t>(l[j + 3])] += row[j + 3];
    }
    for (; j < n; ++j) acc[static_cast<std::size_t>(l[j])] += row[j];

    double a = 0.0;
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < ku; ++c) {
      const double sum = (acc[c] + acc[ku + c]) + (acc[2 * ku + c] + acc[3 * ku + c]);
      if (c == own) {
        a = sum / static_cast<double>(sizes[c] - 1);
      } else {
        b = std::min(b, sum / static_cast<double>(sizes[c]));
      }
    }
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

}  // namespace osal
