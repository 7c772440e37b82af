#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "osal/error.hpp"
#include "osal/parallel.hpp"
#include "osal/random.hpp"
#include "osal/sampling.hpp"

namespace osal {

using Batch = std::vector<std::string>;

struct BatchSchedule {
  int epochs = 0;
  int batch_size = 0;  // equals k: one sample per cluster
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<Batch>> batches;  // [epoch][batch] -> ids in ascending cluster order

  int batches_per_epoch() const { return batches.empty() ? 0 : static_cast<int>(batches.front().size()); }

  friend bool operator==(const BatchSchedule&, const BatchSchedule&) = default;
};

// Shuffle stream for one (epoch, cluster) pair. Independent of the epoch count, so extending a
// schedule leaves its earlier epochs unchanged.
inline std::uint64_t epoch_cluster_seed(std::uint64_t seed, int epoch, int cluster) {
  return derive_seed({seed, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(cluster)});
}

// Every epoch reshuffles each cluster's samples; batch b takes the b-th shuffled sample of
// every cluster.
inline BatchSchedule balanced_schedule(const AnnotationSelection& sel, int epochs, std::uint64_t seed,
                                       unsigned threads = 1) {
  if (epochs < 1) throw invalid_argument("epochs must be >= 1");
  if (sel.k < 1 || sel.per_cluster_ids.size() != static_cast<std::size_t>(sel.k))
    throw invalid_argument("selection lists " + std::to_string(sel.per_cluster_ids.size()) + " clusters, expected " +
                           std::to_string(sel.k));
  const std::size_t per = sel.per_cluster_ids.front().size();
  if (per == 0) throw invalid_argument("selection has empty clusters");
  for (std::size_t c = 0; c < sel.per_cluster_ids.size(); ++c) {
    // Cycling shorter clusters would be the extension point for uneven selections.
    if (sel.per_cluster_ids[c].size() != per)
      throw invalid_argument("cluster " + std::to_string(c) + " holds " + std::to_string(sel.per_cluster_ids[c].size()) +
                             " samples, expected " + std::to_string(per));
  }

  BatchSchedule out;
  out.epochs = epochs;
  out.batch_size = sel.k;
  out.k = sel.k;
  out.seed = seed;
  out.batches.resize(static_cast<std::size_t>(epochs));
  parallel_for(static_cast<std::size_t>(epochs), threads, [&](std::size_t e) {
    std::vector<std::vector<std::string>> shuffled = sel.per_cluster_ids;
    for (int c = 0; c < sel.k; ++c) {
      Rng rng(epoch_cluster_seed(seed, static_cast<int>(e), c));
      rng.shuffle(std::span<std::string>(shuffled[static_cast<std::size_t>(c)]));
    }
    auto& epoch = out.batches[e];
    epoch.assign(per, Batch(static_cast<std::size_t>(sel.k)));
    for (std::size_t b = 0; b < per; ++b)
      for (std::size_t c = 0; c < static_cast<std::size_t>(sel.k); ++c) epoch[b][c] = shuffled[c][b];
  });
  return out;
}

}  // namespace osal
