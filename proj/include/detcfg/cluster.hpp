/*
 * Copyright 2026 The detcfg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "detcfg/error.hpp"
#include "detcfg/matrix.hpp"
#include "detcfg/random.hpp"

namespace detcfg {

struct KMeansOptions {
  std::uint64_t seed = 0;
  int max_iter = 100;
  double tol = 1e-4;  ///< convergence: squared centroid shift relative to mean feature variance
  int restarts = 10;
  bool record_history = false;
};

struct ClusterModel {
  int k = 0;
  Matrix centroids;              ///< k x d
  std::vector<int> assignments;  ///< one entry per point
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  /// Inertia after every Lloyd step of the winning restart, when requested.
  std::vector<double> inertia_history;
};

/// Number of distinct rows (exact equality).
inline std::size_t count_distinct_rows(const Matrix& points) {
  std::vector<std::size_t> idx(points.rows());
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    const auto ra = points.row(a), rb = points.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(idx.begin(), idx.end(), less);
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < idx.size(); ++i)
    if (i == 0 || less(idx[i - 1], idx[i])) ++distinct;
  return distinct;
}

namespace detail {

inline Matrix kmeanspp_init(const Matrix& pts, int k, Rng& rng) {
  const std::size_t n = pts.rows();
  Matrix centers(0, 0);
  centers.append_row(pts.row(rng.below(n)));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(pts.row(i), centers.row(0));
  while (static_cast<int>(centers.rows()) < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      // If rounding exhausts the loop, `pick` holds the last eligible point.
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] > 0.0) pick = i;
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) break;
      }
    }
    centers.append_row(pts.row(pick));
    const auto c = centers.row(centers.rows() - 1);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(pts.row(i), c));
  }
  return centers;
}

inline int nearest(std::span<const double> p, const Matrix& centers, double* dist2) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = squared_distance(p, centers.row(c));
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

inline void recompute_means(const Matrix& pts, const std::vector<int>& assign, Matrix& centers,
                            std::vector<std::size_t>& sizes) {
  const std::size_t d = pts.cols();
  centers = Matrix(centers.rows(), d, 0.0);
  sizes.assign(centers.rows(), 0);
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    auto c = centers.row(static_cast<std::size_t>(assign[i]));
    const auto p = pts.row(i);
    for (std::size_t j = 0; j < d; ++j) c[j] += p[j];
    ++sizes[static_cast<std::size_t>(assign[i])];
  }
  for (std::size_t c = 0; c < centers.rows(); ++c)
    if (sizes[c] > 0)
      for (double& v : centers.row(c)) v /= static_cast<double>(sizes[c]);
}

inline double inertia_of(const Matrix& pts, const std::vector<int>& assign,
                         const Matrix& centers) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.rows(); ++i)
    s += squared_distance(pts.row(i), centers.row(static_cast<std::size_t>(assign[i])));
  return s;
}

inline ClusterModel lloyd(const Matrix& pts, int k, Rng& rng, const KMeansOptions& opt,
                          double tol_abs) {
  const std::size_t n = pts.rows();
  ClusterModel m;
  m.k = k;
  m.centroids = kmeanspp_init(pts, k, rng);
  m.assignments.assign(n, 0);
  std::vector<std::size_t> sizes;
  std::vector<double> dist2(n);

  for (int it = 0; it < std::max(opt.max_iter, 1); ++it) {
    for (std::size_t i = 0; i < n; ++i)
      m.assignments[i] = nearest(pts.row(i), m.centroids, &dist2[i]);

    // Empty clusters take the point currently farthest from its centroid.
    // Lowest-index ties keep this deterministic.
    sizes.assign(static_cast<std::size_t>(k), 0);
    for (int a : m.assignments) ++sizes[static_cast<std::size_t>(a)];
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[static_cast<std::size_t>(m.assignments[i])] <= 1) continue;
        if (far == n || dist2[i] > dist2[far]) far = i;
      }
      if (far == n) throw InvariantError("k-means: cannot repair empty cluster");
      --sizes[static_cast<std::size_t>(m.assignments[far])];
      m.assignments[far] = c;
      sizes[static_cast<std::size_t>(c)] = 1;
      dist2[far] = 0.0;
    }

    Matrix previous = m.centroids;
    recompute_means(pts, m.assignments, m.centroids, sizes);
    m.iterations = it + 1;
    if (opt.record_history) m.inertia_history.push_back(inertia_of(pts, m.assignments, m.centroids));

    double shift = 0.0;
    for (std::size_t c = 0; c < m.centroids.rows(); ++c)
      shift += squared_distance(previous.row(c), m.centroids.row(c));
    if (shift <= tol_abs) break;
  }
  m.inertia = inertia_of(pts, m.assignments, m.centroids);
  return m;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding; the lowest-inertia restart wins.
/// Deterministic for fixed (points, k, seed). The returned centroids are the
/// exact means of their assigned points and no cluster is empty.
inline ClusterModel kmeans(const Matrix& points, int k, const KMeansOptions& opt = {}) {
  if (points.rows() == 0 || points.cols() == 0) throw DomainError("k-means: empty input");
  if (k < 1) throw DomainError("k-means: k must be >= 1");
  if (static_cast<std::size_t>(k) > count_distinct_rows(points))
    throw DomainError("k exceeds distinct points");

  const std::size_t n = points.rows(), d = points.cols();
  double mean_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += points(i, j);
    mu /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += (points(i, j) - mu) * (points(i, j) - mu);
    mean_var += v / static_cast<double>(n);
  }
  mean_var /= static_cast<double>(d);
  const double tol_abs = opt.tol * mean_var;

  ClusterModel best;
  bool have = false;
  for (int r = 0; r < std::max(opt.restarts, 1); ++r) {
    Rng rng(mix_seed(opt.seed, static_cast<std::uint64_t>(r)));
    ClusterModel m = detail::lloyd(points, k, rng, opt, tol_abs);
    if (!have || m.inertia < best.inertia) {
      best = std::move(m);
      have = true;
    }
  }
  best.seed = opt.seed;
  return best;
}

struct SilhouetteOptions {
  std::size_t max_points = 10000;  ///< uniform seeded subsample above this size
  std::uint64_t seed = 0;
};

/// Mean silhouette with Euclidean distance. Members of singleton clusters
/// score 0, as do points where both mean distances are 0.
inline double silhouette_score(const Matrix& points, const std::vector<int>& assignments,
                               const SilhouetteOptions& opt = {}) {
  if (assignments.size() != points.rows())
    throw DomainError("silhouette: assignment count does not match point count");
  int k = 0;
  for (int a : assignments) {
    if (a < 0) throw DomainError("silhouette: negative cluster index");
    k = std::max(k, a + 1);
  }
  if (k < 2) throw DomainError("silhouette undefined for k=1");

  std::vector<std::size_t> idx(points.rows());
  std::iota(idx.begin(), idx.end(), 0);
  if (opt.max_points > 0 && idx.size() > opt.max_points) {
    Rng rng(opt.seed);
    rng.shuffle(idx);
    idx.resize(opt.max_points);
    std::sort(idx.begin(), idx.end());
  }

  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (std::size_t i : idx) ++sizes[static_cast<std::size_t>(assignments[i])];
  // A subsample may miss a cluster; only the full point set must cover all.
  if (idx.size() == points.rows())
    for (std::size_t c = 0; c < sizes.size(); ++c)
      if (sizes[c] == 0)
        throw DomainError("silhouette: cluster " + std::to_string(c) + " is empty");

  std::vector<double> sums(static_cast<std::size_t>(k));
  double total = 0.0;
  for (std::size_t i : idx) {
    const auto own = static_cast<std::size_t>(assignments[i]);
    if (sizes[own] <= 1) continue;  // singleton contributes 0
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j : idx) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(assignments[j])] +=
          std::sqrt(squared_distance(points.row(i), points.row(j)));
    }
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c)
      if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    if (!std::isfinite(b)) continue;
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(idx.size());
}

struct KSelection {
  int best_k = 0;
  std::map<int, double> scores;  ///< k -> silhouette
  ClusterModel model;            ///< the k-means result at best_k
};

/// Runs k-means for every k in [k_min, k_max] and keeps the k with the
/// highest silhouette, preferring the smaller k on ties. k_max is truncated to
/// the number of distinct points.
inline KSelection choose_k(const Matrix& points, int k_min, int k_max,
                           const KMeansOptions& opt = {}, const SilhouetteOptions& sil = {}) {
  if (k_min < 2) throw DomainError("k range must start at 2 or above");
  if (k_max < k_min) throw DomainError("empty k range");
  const std::size_t distinct = points.rows() == 0 ? 0 : count_distinct_rows(points);
  if (points.rows() < 3 || distinct < 2)
    throw DomainError("insufficient points for k selection");
  k_max = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k_max), distinct));
  if (k_max < k_min) throw DomainError("insufficient points for k selection");

  KSelection out;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    ClusterModel m = kmeans(points, k, opt);
    SilhouetteOptions s = sil;
    s.seed = mix_seed(sil.seed ^ opt.seed, static_cast<std::uint64_t>(k));
    const double score = silhouette_score(points, m.assignments, s);
    out.scores[k] = score;
    if (score > best) {
      best = score;
      out.best_k = k;
      out.model = std::move(m);
    }
  }
  return out;
}

}  // namespace detcfg
