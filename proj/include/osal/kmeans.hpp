#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "osal/error.hpp"
#include "osal/features.hpp"
#include "osal/random.hpp"

namespace osal {

struct KMeansOptions {
  int max_iters = 300;
  // Convergence threshold on the largest centroid displacement, relative to the diagonal of the
  // data's bounding box.
  double tol = 1e-4;
};

struct ClusterAssignment {
  int k = 0;
  std::uint64_t seed = 0;
  std::size_t d = 0;
  std::vector<int> labels;
  std::vector<double> centroids;  // k x d, row-major
  double inertia = 0.0;
  int iterations = 0;
  // Inertia after the initial assignment and after every Lloyd iteration.
  std::vector<double> inertia_trace;

  std::span<const double> centroid(int c) const {
    return {centroids.data() + static_cast<std::size_t>(c) * d, d};
  }
  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
  }
};

namespace detail {

// Four partial sums in a fixed order: independent add chains, same result on every run.
inline double squared_distance(std::span<const float> x, const double* c) noexcept {
  const std::size_t d = x.size();
  const float* p = x.data();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= d; j += 4) {
    const double d0 = static_cast<double>(p[j]) - c[j];
    const double d1 = static_cast<double>(p[j + 1]) - c[j + 1];
    const double d2 = static_cast<double>(p[j + 2]) - c[j + 2];
    const double d3 = static_cast<double>(p[j + 3]) - c[j + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; j < d; ++j) {
    const double diff = static_cast<double>(p[j]) - c[j];
    s0 += diff * diff;
  }
  return (s0 + s1) + (s2 + s3);
}

inline double bounding_box_diagonal(const FeatureMatrix& f) {
  double sq = 0.0;
  for (std::size_t j = 0; j < f.d(); ++j) {
    float lo = f(0, j);
    float hi = lo;
    for (std::size_t i = 1; i < f.n(); ++i) {
      lo = std::min(lo, f(i, j));
      hi = std::max(hi, f(i, j));
    }
    const double extent = static_cast<double>(hi) - lo;
    sq += extent * extent;
  }
  return std::sqrt(sq);
}

// k-means++ seeding: first center uniform, then each next center drawn with probability
// proportional to its squared distance from the nearest chosen center.
inline std::vector<double> kmeanspp_init(const FeatureMatrix& f, int k, Rng& rng) {
  const std::size_t n = f.n();
  const std::size_t d = f.d();
  std::vector<double> centroids(static_cast<std::size_t>(k) * d);
  std::vector<char> chosen(n, 0);
  auto place = [&](int c, std::size_t idx) {
    chosen[idx] = 1;
    const auto row = f.row(idx);
    std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
  };

  place(0, static_cast<std::size_t>(rng.below(n)));
  std::vector<double> min_sq(n);
  for (std::size_t i = 0; i < n; ++i) min_sq[i] = squared_distance(f.row(i), centroids.data());

  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : min_sq) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double running = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (min_sq[i] <= 0.0) continue;
        running += min_sq[i];
        pick = i;
        if (running > target) break;
      }
    } else {
      // Every point coincides with a chosen center; pick uniformly among the unchosen.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) rest.push_back(i);
      pick = rest[static_cast<std::size_t>(rng.below(rest.size()))];
    }
    place(c, pick);
    const double* centre = centroids.data() + static_cast<std::size_t>(c) * d;
    for (std::size_t i = 0; i < n; ++i) min_sq[i] = std::min(min_sq[i], squared_distance(f.row(i), centre));
  }
  return centroids;
}

// Exact nearest and second-nearest centroid of one sample; ties go to the lowest index.
struct NearestPair {
  int best = 0;
  double best_sq = 0.0;
  double second_sq = 0.0;
};

inline NearestPair scan_centroids(std::span<const float> x, std::span<const double> centroids, int k) {
  const std::size_t d = x.size();
  NearestPair r;
  r.best_sq = squared_distance(x, centroids.data());
  r.second_sq = std::numeric_limits<double>::infinity();
  for (int c = 1; c < k; ++c) {
    const double sq = squared_distance(x, centroids.data() + static_cast<std::size_t>(c) * d);
    if (sq < r.best_sq) {
      r.second_sq = r.best_sq;
      r.best_sq = sq;
      r.best = c;
    } else if (sq < r.second_sq) {
      r.second_sq = sq;
    }
  }
  return r;
}

// Assignment step of Lloyd's algorithm, accelerated with Hamerly's bounds. Each sample keeps an
// upper bound on the distance to its centroid and a lower bound on the distance to every other
// centroid. A sample is only rescanned when the bounds cannot prove its label; the proof demands
// a margin far above rounding error, so labels match a full nearest-centroid scan exactly.
class Assigner {
 public:
  Assigner(const FeatureMatrix& f, int k, double scale)
      : f_(f), k_(k), margin_(1e-9 * scale), upper_(f.n()), lower_(f.n()), half_gap_(static_cast<std::size_t>(k)) {}

  // Forces a full scan of every sample on the next call.
  void invalidate() { valid_ = false; }

  // `shift[c]` is how far centroid c moved since the previous call.
  double assign(std::span<const double> centroids, std::span<const double> shift, std::vector<int>& labels,
                std::vector<double>& sq_dist) {
    const std::size_t n = f_.n();
    const std::size_t d = f_.d();
    if (valid_) {
      double max_shift = 0.0;
      for (double s : shift) max_shift = std::max(max_shift, s);
      for (int a = 0; a < k_; ++a) {
        double nearest = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k_; ++c) {
          if (c == a) continue;
          nearest = std::min(nearest, centroid_distance(centroids, a, c));
        }
        half_gap_[static_cast<std::size_t>(a)] = 0.5 * nearest;
      }
      for (std::size_t i = 0; i < n; ++i) lower_[i] -= max_shift;
    }

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = f_.row(i);
      if (valid_) {
        const int a = labels[i];
        const double sq = squared_distance(x, centroids.data() + static_cast<std::size_t>(a) * d);
        const double dist = std::sqrt(sq);
        const double bound = std::max(lower_[i], half_gap_[static_cast<std::size_t>(a)]);
        if (dist + margin_ < bound) {
          upper_[i] = dist;
          sq_dist[i] = sq;
          inertia += sq;
          continue;
        }
      }
      const auto r = scan_centroids(x, centroids, k_);
      labels[i] = r.best;
      sq_dist[i] = r.best_sq;
      upper_[i] = std::sqrt(r.best_sq);
      lower_[i] = std::sqrt(r.second_sq);
      inertia += r.best_sq;
    }
    valid_ = true;
    return inertia;
  }

 private:
  double centroid_distance(std::span<const double> centroids, int a, int b) const {
    const std::size_t d = f_.d();
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = centroids[static_cast<std::size_t>(a) * d + j] - centroids[static_cast<std::size_t>(b) * d + j];
      sq += diff * diff;
    }
    return std::sqrt(sq);
  }

  const FeatureMatrix& f_;
  int k_;
  double margin_;
  bool valid_ = false;
  std::vector<double> upper_;
  std::vector<double> lower_;
  std::vector<double> half_gap_;
};

// Fills every empty cluster with the sample farthest from its own centroid, taken from a
// cluster that still has at least two members. The moved sample becomes the new centroid.
// Returns true when anything moved.
inline bool repair_empty_clusters(const FeatureMatrix& f, std::vector<double>& centroids, int k,
                                  std::vector<int>& labels, std::vector<double>& sq_dist) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  bool moved = false;
  for (int c = 0; c < k; ++c) {
    if (sizes[static_cast<std::size_t>(c)] != 0) continue;
    std::size_t far = f.n();
    double far_sq = -1.0;
    for (std::size_t i = 0; i < f.n(); ++i) {
      if (sizes[static_cast<std::size_t>(labels[i])] < 2) continue;
      if (sq_dist[i] > far_sq) {
        far_sq = sq_dist[i];
        far = i;
      }
    }
    --sizes[static_cast<std::size_t>(labels[far])];
    labels[far] = c;
    sq_dist[far] = 0.0;
    ++sizes[static_cast<std::size_t>(c)];
    const auto row = f.row(far);
    std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(c) * f.d()));
    moved = true;
  }
  return moved;
}

inline void update_means(const FeatureMatrix& f, std::span<const int> labels, int k, std::vector<double>& centroids) {
  const std::size_t d = f.d();
  std::vector<double> sums(static_cast<std::size_t>(k) * d, 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < f.n(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++counts[c];
    const auto x = f.row(i);
    double* s = sums.data() + c * d;
    for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
  }
  for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
    if (counts[c] == 0) continue;  // keeps its previous position
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] = sums[c * d + j] * inv;
  }
}

}  // namespace detail

// Lloyd's algorithm from k-means++ seeding. Deterministic in (f, k, seed, options).
inline ClusterAssignment kmeans(const FeatureMatrix& f, int k, std::uint64_t seed, const KMeansOptions& options = {}) {
  if (k < 2) throw invalid_argument("k must be >= 2, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > f.n())
    throw invalid_argument("k=" + std::to_string(k) + " exceeds the sample count " + std::to_string(f.n()));
  if (options.max_iters < 1) throw invalid_argument("max_iters must be >= 1");
  if (!(options.tol >= 0.0)) throw invalid_argument("tol must be >= 0");

  const std::size_t n = f.n();
  const std::size_t d = f.d();
  const auto ku = static_cast<std::size_t>(k);
  Rng rng(seed);
  ClusterAssignment out;
  out.k = k;
  out.seed = seed;
  out.d = d;
  out.labels.assign(n, 0);
  out.centroids = detail::kmeanspp_init(f, k, rng);

  const double diagonal = detail::bounding_box_diagonal(f);
  const double tol_abs = options.tol * diagonal;
  detail::Assigner assigner(f, k, diagonal);
  std::vector<double> sq_dist(n);
  std::vector<double> shift(ku, 0.0);
  auto inertia_of = [&] {
    double s = 0.0;
    for (double v : sq_dist) s += v;
    return s;
  };

  out.inertia = assigner.assign(out.centroids, shift, out.labels, sq_dist);
  bool repaired = detail::repair_empty_clusters(f, out.centroids, k, out.labels, sq_dist);
  if (repaired) {
    out.inertia = inertia_of();
    assigner.invalidate();
  }
  out.inertia_trace.push_back(out.inertia);

  std::vector<double> previous(out.centroids.size());
  std::vector<int> before(n);
  int it = 0;
  while (it < options.max_iters) {
    ++it;
    previous = out.centroids;
    detail::update_means(f, out.labels, k, out.centroids);
    double max_shift = 0.0;
    for (std::size_t c = 0; c < ku; ++c) {
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = out.centroids[c * d + j] - previous[c * d + j];
        sq += diff * diff;
      }
      shift[c] = std::sqrt(sq);
      max_shift = std::max(max_shift, shift[c]);
    }

    before = out.labels;
    out.inertia = assigner.assign(out.centroids, shift, out.labels, sq_dist);
    const bool changed = before != out.labels;
    repaired = detail::repair_empty_clusters(f, out.centroids, k, out.labels, sq_dist);
    if (repaired) {
      out.inertia = inertia_of();
      assigner.invalidate();
    }
    out.inertia_trace.push_back(out.inertia);

    if (repaired) continue;
    if (!changed || max_shift < tol_abs) break;
  }
  out.iterations = it;
  return out;
}

}  // namespace osal
