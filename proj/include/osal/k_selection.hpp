#pragma once

// Multi-seed selection of the cluster count.
//
// For every candidate K the data is clustered once per seed. Each run's silhouette is recorded
// together with the adjusted Rand index against the run at the preceding seed. Candidates are
// ranked by their mean ARI (stability); among the `top_t` most stable, the one whose best run
// has the highest silhouette is chosen, together with that run's seed.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "osal/error.hpp"
#include "osal/features.hpp"
#include "osal/kmeans.hpp"
#include "osal/metrics.hpp"
#include "osal/parallel.hpp"
#include "osal/random.hpp"

namespace osal {

inline constexpr std::uint64_t kDefaultMasterSeed = 2018;

struct SelectKOptions {
  int k_min = 4;
  int k_max = 20;
  int n_seeds = 100;
  int top_t = 2;
  std::uint64_t master_seed = kDefaultMasterSeed;
  KMeansOptions kmeans{};
  unsigned threads = 0;
  // Called once per finished K (possibly from a worker thread).
  std::function<void(int k)> on_k_done{};
};

// One (K, seed) run of the sweep.
struct SweepRecord {
  int k = 0;
  int seed_index = 0;
  std::uint64_t seed = 0;
  double silhouette = 0.0;
  std::optional<double> ari_to_previous;
  double inertia = 0.0;
  int iterations = 0;

  friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

struct PerKStats {
  int k = 0;
  double avg_ari = 0.0;
  std::uint64_t hi_seed = 0;
  double hi_score = 0.0;
  int ari_samples = 0;

  friend bool operator==(const PerKStats&, const PerKStats&) = default;
};

struct KSelectionReport {
  std::vector<PerKStats> stats;      // ascending K
  std::vector<int> ranking;          // K values, most stable first
  int chosen_k = 0;
  std::uint64_t chosen_seed = 0;
  int top_t = 0;
  int n_seeds = 0;
  std::uint64_t master_seed = 0;
  std::vector<SweepRecord> runs;     // ordered by (K, seed_index)

  const PerKStats& stats_for(int k) const {
    for (const auto& s : stats)
      if (s.k == k) return s;
    throw invalid_argument("no statistics for K=" + std::to_string(k));
  }
};

// Distinct per-run seeds from a counter pushed through SplitMix64. Distinct counters map to
// distinct outputs because the mixer is a bijection.
inline std::vector<std::uint64_t> seed_sequence(std::uint64_t master_seed, int n_seeds) {
  if (n_seeds < 1) throw invalid_argument("n_seeds must be >= 1");
  std::vector<std::uint64_t> seeds;
  seeds.reserve(static_cast<std::size_t>(n_seeds));
  std::uint64_t counter = splitmix64(master_seed);
  for (int i = 0; i < n_seeds; ++i) {
    seeds.push_back(splitmix64(counter));
    counter += 0x9E3779B97F4A7C15ULL;
  }
  return seeds;
}

// Recomputes per-K statistics and the final choice from a sweep log. `runs` must hold, for
// every K, the records of seed indices 0..n-1 in order.
inline KSelectionReport decide_from_log(std::vector<SweepRecord> runs, int top_t) {
  if (runs.empty()) throw invalid_argument("empty sweep log");
  std::stable_sort(runs.begin(), runs.end(), [](const SweepRecord& a, const SweepRecord& b) {
    return a.k != b.k ? a.k < b.k : a.seed_index < b.seed_index;
  });

  KSelectionReport report;
  for (std::size_t begin = 0; begin < runs.size();) {
    std::size_t end = begin;
    while (end < runs.size() && runs[end].k == runs[begin].k) ++end;
    PerKStats s;
    s.k = runs[begin].k;
    s.hi_seed = runs[begin].seed;
    s.hi_score = runs[begin].silhouette;
    double ari_sum = 0.0;
    for (std::size_t r = begin; r < end; ++r) {
      if (runs[r].silhouette > s.hi_score) {
        s.hi_score = runs[r].silhouette;
        s.hi_seed = runs[r].seed;
      }
      if (r > begin) {
        if (!runs[r].ari_to_previous) throw invalid_argument("sweep log misses an ARI for K=" + std::to_string(s.k));
        ari_sum += *runs[r].ari_to_previous;
        ++s.ari_samples;
      }
    }
    if (s.ari_samples == 0) throw invalid_argument("K=" + std::to_string(s.k) + " needs at least 2 runs");
    s.avg_ari = ari_sum / s.ari_samples;
    report.stats.push_back(s);
    report.n_seeds = std::max(report.n_seeds, static_cast<int>(end - begin));
    begin = end;
  }
  if (top_t < 1 || static_cast<std::size_t>(top_t) > report.stats.size())
    throw invalid_argument("top_t must lie in [1, " + std::to_string(report.stats.size()) + "]");

  std::vector<PerKStats> ranked = report.stats;
  std::stable_sort(ranked.begin(), ranked.end(), [](const PerKStats& a, const PerKStats& b) {
    return a.avg_ari != b.avg_ari ? a.avg_ari > b.avg_ari : a.k < b.k;
  });
  for (const auto& s : ranked) report.ranking.push_back(s.k);

  const PerKStats* best = &ranked[0];
  for (int t = 1; t < top_t; ++t) {
    const PerKStats& c = ranked[static_cast<std::size_t>(t)];
    if (c.hi_score > best->hi_score || (c.hi_score == best->hi_score && c.k < best->k)) best = &c;
  }
  report.chosen_k = best->k;
  report.chosen_seed = best->hi_seed;
  report.top_t = top_t;
  report.runs = std::move(runs);
  return report;
}

namespace detail {

struct LabelKeyHash {
  std::size_t operator()(const std::vector<int>& v) const noexcept {
    return std::hash<std::string_view>{}(
        std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(int)));
  }
};

// All runs for one K in seed order. Silhouette depends only on the partition, so it is cached
// per canonical labeling.
inline std::vector<SweepRecord> sweep_one_k(const FeatureMatrix& f, const DistanceMatrix& dm, int k,
                                            std::span<const std::uint64_t> seeds, const KMeansOptions& km) {
  std::vector<SweepRecord> out;
  out.reserve(seeds.size());
  std::unordered_map<std::vector<int>, double, LabelKeyHash> cache;
  std::vector<int> previous;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    auto ca = kmeans(f, k, seeds[s], km);
    SweepRecord rec;
    rec.k = k;
    rec.seed_index = static_cast<int>(s);
    rec.seed = seeds[s];
    rec.inertia = ca.inertia;
    rec.iterations = ca.iterations;

    int distinct = 0;
    auto canonical = dense_labels(ca.labels, distinct);
    if (auto it = cache.find(canonical); it != cache.end()) {
      rec.silhouette = it->second;
    } else {
      rec.silhouette = silhouette(dm, canonical);
      cache.emplace(std::move(canonical), rec.silhouette);
    }
    if (s > 0) rec.ari_to_previous = adjusted_rand_index(ca.labels, previous);
    previous = std::move(ca.labels);
    out.push_back(rec);
  }
  return out;
}

}  // namespace detail

inline KSelectionReport select_k(const FeatureMatrix& f, const DistanceMatrix& dm, const SelectKOptions& opt) {
  if (opt.k_min < 2) throw invalid_argument("k_min must be >= 2");
  if (opt.k_min > opt.k_max)
    throw invalid_argument("k_min (" + std::to_string(opt.k_min) + ") exceeds k_max (" + std::to_string(opt.k_max) + ")");
  if (static_cast<std::size_t>(opt.k_max) > f.n())
    throw invalid_argument("k_max (" + std::to_string(opt.k_max) + ") exceeds the sample count " + std::to_string(f.n()));
  if (opt.n_seeds < 2) throw invalid_argument("n_seeds must be >= 2");
  if (opt.top_t < 1 || opt.top_t > opt.k_max - opt.k_min + 1)
    throw invalid_argument("top_t must lie in [1, " + std::to_string(opt.k_max - opt.k_min + 1) + "]");
  if (dm.n() != f.n()) throw invalid_argument("distance matrix does not match the feature matrix");

  const auto seeds = seed_sequence(opt.master_seed, opt.n_seeds);
  const auto n_k = static_cast<std::size_t>(opt.k_max - opt.k_min + 1);
  std::vector<std::vector<SweepRecord>> per_k(n_k);
  parallel_for(n_k, opt.threads, [&](std::size_t i) {
    const int k = opt.k_min + static_cast<int>(i);
    per_k[i] = detail::sweep_one_k(f, dm, k, seeds, opt.kmeans);
    if (opt.on_k_done) opt.on_k_done(k);
  });

  std::vector<SweepRecord> runs;
  runs.reserve(n_k * seeds.size());
  for (auto& v : per_k) runs.insert(runs.end(), v.begin(), v.end());
  auto report = decide_from_log(std::move(runs), opt.top_t);
  report.master_seed = opt.master_seed;
  return report;
}

inline KSelectionReport select_k(const FeatureMatrix& f, const SelectKOptions& opt) {
  return select_k(f, pairwise_distances(f, opt.threads), opt);
}

}  // namespace osal
