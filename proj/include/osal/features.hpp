#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "osal/error.hpp"
#include "osal/parallel.hpp"

namespace osal {

// n x d embedding matrix, row-major 32-bit values, one unique id per row.
class FeatureMatrix {
 public:
  FeatureMatrix(std::size_t n, std::size_t d, std::vector<float> values, std::vector<std::string> ids)
      : n_(n), d_(d), values_(std::move(values)), ids_(std::move(ids)) {
    if (n_ < 2) throw data_error("feature matrix needs at least 2 samples, got " + std::to_string(n_));
    if (d_ < 1) throw data_error("feature dimension must be at least 1");
    if (values_.size() != n_ * d_)
      throw data_error("feature matrix holds " + std::to_string(values_.size()) + " values, expected " +
                       std::to_string(n_ * d_));
    if (ids_.empty()) ids_ = synthesize_ids(n_);
    if (ids_.size() != n_)
      throw data_error("got " + std::to_string(ids_.size()) + " ids for " + std::to_string(n_) + " samples");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]))
        throw data_error("non-finite value at row " + std::to_string(i / d_) + ", column " +
                         std::to_string(i % d_));
    }
    std::unordered_set<std::string_view> seen;
    seen.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      if (ids_[i].empty()) throw data_error("empty id at row " + std::to_string(i));
      if (!seen.insert(ids_[i]).second)
        throw data_error("duplicate id '" + ids_[i] + "' at row " + std::to_string(i));
    }
  }

  // Ids default to "sample_{row}".
  FeatureMatrix(std::size_t n, std::size_t d, std::vector<float> values)
      : FeatureMatrix(n, d, std::move(values), {}) {}

  static std::vector<std::string> synthesize_ids(std::size_t n) {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back("sample_" + std::to_string(i));
    return ids;
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> row(std::size_t i) const noexcept { return {values_.data() + i * d_, d_}; }
  float operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * d_ + j]; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t i) const noexcept { return ids_[i]; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<float> values_;
  std::vector<std::string> ids_;
};

// Row-wise L2 normalization. Zero rows are left unchanged.
inline FeatureMatrix l2_normalize(const FeatureMatrix& f) {
  std::vector<float> out(f.values().begin(), f.values().end());
  for (std::size_t i = 0; i < f.n(); ++i) {
    double sq = 0.0;
    for (float v : f.row(i)) sq += static_cast<double>(v) * v;
    if (sq <= 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < f.d(); ++j) out[i * f.d() + j] = static_cast<float>(f(i, j) * inv);
  }
  return FeatureMatrix(f.n(), f.d(), std::move(out), f.ids());
}

// Dense symmetric matrix of pairwise Euclidean distances, stored as 32-bit values.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;

  // Validates symmetry, zero diagonal and non-negativity.
  static DistanceMatrix from_values(std::size_t n, std::vector<float> values) {
    if (values.size() != n * n) throw invalid_argument("distance matrix must be n*n");
    for (std::size_t i = 0; i < n; ++i) {
      if (values[i * n + i] != 0.0f) throw invalid_argument("distance matrix diagonal must be zero");
      for (std::size_t j = 0; j < n; ++j) {
        const float v = values[i * n + j];
        if (!std::isfinite(v) || v < 0.0f) throw invalid_argument("distances must be finite and non-negative");
        if (v != values[j * n + i]) throw invalid_argument("distance matrix must be symmetric");
      }
    }
    return DistanceMatrix(n, std::move(values));
  }

  std::size_t n() const noexcept { return n_; }
  float operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * n_ + j]; }
  std::span<const float> row(std::size_t i) const noexcept { return {values_.data() + i * n_, n_}; }
  std::span<const float> values() const noexcept { return values_; }

 private:
  DistanceMatrix(std::size_t n, std::vector<float> values) : n_(n), values_(std::move(values)) {}

  friend DistanceMatrix pairwise_distances(const FeatureMatrix&, unsigned);

  std::size_t n_ = 0;
  std::vector<float> values_;
};

// Euclidean distance between two rows, accumulated in double.
inline double euclidean(std::span<const float> a, std::span<const float> b) noexcept {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

// Each entry is computed independently, so the result does not depend on `threads`.
inline DistanceMatrix pairwise_distances(const FeatureMatrix& f, unsigned threads = 0) {
  const std::size_t n = f.n();
  std::vector<float> values(n * n, 0.0f);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto xi = f.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto dist = static_cast<float>(euclidean(xi, f.row(j)));
      values[i * n + j] = dist;
      values[j * n + i] = dist;
    }
  });
  return DistanceMatrix(n, std::move(values));
}

}  // namespace osal
