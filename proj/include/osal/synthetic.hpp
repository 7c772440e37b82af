#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "osal/error.hpp"
#include "osal/features.hpp"
#include "osal/random.hpp"

namespace osal {

struct SyntheticGroundTruth {
  FeatureMatrix features;
  std::vector<int> true_labels;
  int k_true;
};

struct SyntheticParams {
  int k_true = 7;
  int n_per_cluster = 300;
  int d = 32;
  double separation = 10.0;
  double spread = 1.0;
  std::uint64_t seed = 0;
  int max_placement_attempts = 10000;  // per center
};

// Isotropic Gaussian mixture. Centers are drawn uniformly from the cube [-h, h]^d with
// h = separation * max(1, k^(1/d)) and rejected until every pair is at least `separation`
// apart. Samples are laid out component by component.
inline SyntheticGroundTruth generate_synthetic(const SyntheticParams& p) {
  if (p.k_true < 1) throw invalid_argument("k_true must be >= 1");
  if (p.n_per_cluster < 1) throw invalid_argument("n_per_cluster must be >= 1");
  if (p.d < 1) throw invalid_argument("d must be >= 1");
  if (!(p.separation > 0.0) || !std::isfinite(p.separation)) throw invalid_argument("separation must be > 0");
  if (!(p.spread > 0.0) || !std::isfinite(p.spread)) throw invalid_argument("spread must be > 0");
  const auto n = static_cast<std::size_t>(p.k_true) * static_cast<std::size_t>(p.n_per_cluster);
  if (n < 2) throw invalid_argument("synthetic data needs at least 2 samples");

  const int kMaxAttempts = p.max_placement_attempts;
  const auto d = static_cast<std::size_t>(p.d);
  Rng rng(derive_seed({p.seed, 0x63656e74ULL}));
  std::vector<double> centers;
  centers.reserve(static_cast<std::size_t>(p.k_true) * d);
  std::vector<double> candidate(d);
  const double half_width = p.separation * std::max(1.0, std::pow(static_cast<double>(p.k_true), 1.0 / p.d));
  for (int c = 0; c < p.k_true; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      for (auto& x : candidate) x = (2.0 * rng.uniform() - 1.0) * half_width;
      placed = true;
      for (int o = 0; o < c && placed; ++o) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = candidate[j] - centers[static_cast<std::size_t>(o) * d + j];
          sq += diff * diff;
        }
        placed = std::sqrt(sq) >= p.separation;
      }
    }
    if (!placed)
      throw numerical_error("could not place center " + std::to_string(c) + " at separation " +
                            std::to_string(p.separation) + " within " + std::to_string(kMaxAttempts) + " attempts");
    centers.insert(centers.end(), candidate.begin(), candidate.end());
  }

  Rng noise(derive_seed({p.seed, 0x706f696eULL}));
  std::vector<float> values;
  values.reserve(n * d);
  std::vector<int> labels;
  labels.reserve(n);
  for (int c = 0; c < p.k_true; ++c) {
    for (int s = 0; s < p.n_per_cluster; ++s) {
      for (std::size_t j = 0; j < d; ++j)
        values.push_back(static_cast<float>(centers[static_cast<std::size_t>(c) * d + j] + p.spread * noise.normal()));
      labels.push_back(c);
    }
  }
  return {FeatureMatrix(n, d, std::move(values)), std::move(labels), p.k_true};
}

}  // namespace osal
