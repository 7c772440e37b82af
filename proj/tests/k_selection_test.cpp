#include <set>

#include <gtest/gtest.h>

#include "osal/k_selection.hpp"
#include "osal/synthetic.hpp"

namespace {

osal::SweepRecord rec(int k, int idx, double sil, std::optional<double> ari) {
  osal::SweepRecord r;
  r.k = k;
  r.seed_index = idx;
  r.seed = static_cast<std::uint64_t>(1000 * k + idx);
  r.silhouette = sil;
  r.ari_to_previous = ari;
  return r;
}

osal::FeatureMatrix mixture(int k, int per, int d, std::uint64_t seed) {
  return osal::generate_synthetic({.k_true = k, .n_per_cluster = per, .d = d, .separation = 10, .spread = 1, .seed = seed})
      .features;
}

}  // namespace

TEST(SeedSequence, Basics) {
  EXPECT_EQ(osal::seed_sequence(5, 1).size(), 1u);
  EXPECT_EQ(osal::seed_sequence(osal::kDefaultMasterSeed, 100), osal::seed_sequence(osal::kDefaultMasterSeed, 100));
  EXPECT_NE(osal::seed_sequence(osal::kDefaultMasterSeed, 100), osal::seed_sequence(osal::kDefaultMasterSeed + 1, 100));
  EXPECT_THROW(osal::seed_sequence(1, 0), osal::invalid_argument);
}

TEST(SeedSequence, PrefixStableAndDuplicateFree) {
  for (std::uint64_t m : std::vector<std::uint64_t>{0, 1, osal::kDefaultMasterSeed, ~0ULL}) {
    const auto long_seq = osal::seed_sequence(m, 10000);
    const auto short_seq = osal::seed_sequence(m, 100);
    EXPECT_TRUE(std::equal(short_seq.begin(), short_seq.end(), long_seq.begin()));
    EXPECT_EQ(std::set<std::uint64_t>(long_seq.begin(), long_seq.end()).size(), long_seq.size());
  }
}

TEST(DecideFromLog, AveragesConsecutiveAris) {
  const std::vector<osal::SweepRecord> runs{
      rec(2, 0, 0.5, std::nullopt), rec(2, 1, 0.7, 0.9), rec(2, 2, 0.6, 0.7),
      rec(3, 0, 0.4, std::nullopt), rec(3, 1, 0.8, 0.5), rec(3, 2, 0.8, 0.6),
  };
  const auto r = osal::decide_from_log(runs, 1);
  ASSERT_EQ(r.stats.size(), 2u);
  EXPECT_DOUBLE_EQ(r.stats_for(2).avg_ari, 0.8);
  EXPECT_EQ(r.stats_for(2).ari_samples, 2);
  EXPECT_EQ(r.stats_for(2).hi_seed, 2001u);
  EXPECT_DOUBLE_EQ(r.stats_for(3).avg_ari, 0.55);
  EXPECT_EQ(r.stats_for(3).hi_seed, 3001u);  // equal silhouettes keep the earlier seed
  EXPECT_EQ(r.ranking, (std::vector<int>{2, 3}));
  EXPECT_EQ(r.chosen_k, 2);
  EXPECT_EQ(r.chosen_seed, 2001u);
  // With both candidates in play the higher silhouette wins.
  const auto r2 = osal::decide_from_log(runs, 2);
  EXPECT_EQ(r2.chosen_k, 3);
  EXPECT_EQ(r2.chosen_seed, 3001u);
}

TEST(DecideFromLog, TiesPreferSmallerK) {
  const std::vector<osal::SweepRecord> runs{
      rec(5, 0, 0.3, std::nullopt), rec(5, 1, 0.6, 0.5),
      rec(4, 0, 0.6, std::nullopt), rec(4, 1, 0.1, 0.5),
      rec(6, 0, 0.2, std::nullopt), rec(6, 1, 0.2, 0.9),
  };
  const auto r = osal::decide_from_log(runs, 3);
  EXPECT_EQ(r.ranking, (std::vector<int>{6, 4, 5}));
  EXPECT_EQ(r.chosen_k, 4);  // equal hi_score with K=5
  EXPECT_EQ(r.chosen_seed, 4000u);
  EXPECT_EQ(osal::decide_from_log(runs, 1).chosen_k, 6);
}

TEST(DecideFromLog, RejectsBrokenLogs) {
  EXPECT_THROW(osal::decide_from_log({}, 1), osal::invalid_argument);
  EXPECT_THROW(osal::decide_from_log({rec(2, 0, 0.1, std::nullopt)}, 1), osal::invalid_argument);
  EXPECT_THROW(osal::decide_from_log({rec(2, 0, 0.1, std::nullopt), rec(2, 1, 0.1, std::nullopt)}, 1),
               osal::invalid_argument);
  EXPECT_THROW(osal::decide_from_log({rec(2, 0, 0.1, std::nullopt), rec(2, 1, 0.1, 1.0)}, 2), osal::invalid_argument);
}

TEST(SelectK, TwoSeedsGiveOneAriSample) {
  const auto f = mixture(3, 20, 4, 1);
  const auto r = osal::select_k(f, {.k_min = 2, .k_max = 5, .n_seeds = 2, .top_t = 2});
  ASSERT_EQ(r.stats.size(), 4u);
  for (const auto& s : r.stats) EXPECT_EQ(s.ari_samples, 1);
  EXPECT_EQ(r.runs.size(), 8u);
}

TEST(SelectK, ReportIsRecomputableFromLog) {
  const auto f = mixture(4, 30, 6, 2);
  const auto r = osal::select_k(f, {.k_min = 2, .k_max = 7, .n_seeds = 8, .top_t = 2, .master_seed = 77});
  const auto again = osal::decide_from_log(r.runs, r.top_t);
  EXPECT_EQ(again.stats, r.stats);
  EXPECT_EQ(again.ranking, r.ranking);
  EXPECT_EQ(again.chosen_k, r.chosen_k);
  EXPECT_EQ(again.chosen_seed, r.chosen_seed);
  for (const auto& s : r.stats) {
    double best = -2;
    for (const auto& run : r.runs)
      if (run.k == s.k) best = std::max(best, run.silhouette);
    EXPECT_EQ(s.hi_score, best);
    EXPECT_EQ(s.ari_samples, 7);
  }
  // The chosen K is among the top_t most stable.
  EXPECT_TRUE(r.chosen_k == r.ranking[0] || r.chosen_k == r.ranking[1]);
}

TEST(SelectK, IndependentOfThreadCount) {
  const auto f = mixture(5, 30, 5, 3);
  osal::SelectKOptions opt{.k_min = 2, .k_max = 9, .n_seeds = 10, .top_t = 2, .master_seed = 5};
  opt.threads = 1;
  const auto serial = osal::select_k(f, opt);
  opt.threads = 4;
  const auto parallel = osal::select_k(f, opt);
  EXPECT_EQ(serial.runs, parallel.runs);
  EXPECT_EQ(serial.stats, parallel.stats);
  EXPECT_EQ(serial.chosen_k, parallel.chosen_k);
  EXPECT_EQ(serial.chosen_seed, parallel.chosen_seed);
}

TEST(SelectK, RecoversSevenComponentsWithDefaults) {
  const auto f = mixture(7, 100, 32, 7);
  const auto r = osal::select_k(f, osal::SelectKOptions{});
  EXPECT_EQ(r.chosen_k, 7);
  EXPECT_EQ(r.stats.size(), 17u);
  EXPECT_GT(r.stats_for(7).avg_ari, r.stats_for(20).avg_ari);
}

TEST(SelectK, RecoversFourComponentsAtLowerBound) {
  const auto f = mixture(4, 100, 32, 4);
  EXPECT_EQ(osal::select_k(f, osal::SelectKOptions{}).chosen_k, 4);
}

TEST(SelectK, RejectsBadOptions) {
  const auto f = mixture(2, 5, 2, 1);
  EXPECT_THROW(osal::select_k(f, {.k_min = 5, .k_max = 4}), osal::invalid_argument);
  EXPECT_THROW(osal::select_k(f, {.k_min = 1, .k_max = 4}), osal::invalid_argument);
  EXPECT_THROW(osal::select_k(f, {.k_min = 2, .k_max = 11}), osal::invalid_argument);
  EXPECT_THROW(osal::select_k(f, {.k_min = 2, .k_max = 4, .n_seeds = 1}), osal::invalid_argument);
  EXPECT_THROW(osal::select_k(f, {.k_min = 2, .k_max = 4, .n_seeds = 3, .top_t = 4}), osal::invalid_argument);
  EXPECT_THROW(osal::select_k(f, {.k_min = 2, .k_max = 4, .n_seeds = 3, .top_t = 0}), osal::invalid_argument);
}
