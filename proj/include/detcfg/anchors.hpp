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

// Anchor-size estimation from ground-truth box dimensions, and the log-ratio
// width/height regression targets used to measure how well anchors fit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "detcfg/cluster.hpp"
#include "detcfg/dataset.hpp"
#include "detcfg/error.hpp"
#include "detcfg/matrix.hpp"

namespace detcfg {

struct AnchorSize {
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const AnchorSize&, const AnchorSize&) = default;
};

struct AnchorSet {
  std::vector<AnchorSize> sizes;  ///< ascending by area
  int k = 0;
  double silhouette = 0.0;
  std::map<int, double> per_k_scores;

  friend bool operator==(const AnchorSet&, const AnchorSet&) = default;
};

inline void validate_anchor_set(const AnchorSet& a) {
  if (a.sizes.empty()) throw DomainError("anchor set is empty");
  if (static_cast<std::size_t>(a.k) != a.sizes.size())
    throw DomainError("anchor set k does not match its size count");
  for (const auto& s : a.sizes)
    if (!(s.w > 0.0) || !(s.h > 0.0)) throw DomainError("anchor dimensions must be positive");
}

/// Builds a set from explicit sizes (presets or an imported anchors file).
inline AnchorSet make_anchor_set(std::vector<AnchorSize> sizes) {
  AnchorSet a;
  a.sizes = std::move(sizes);
  a.k = static_cast<int>(a.sizes.size());
  validate_anchor_set(a);
  return a;
}

struct AnchorEstimateOptions {
  int k_min = 2;
  int k_max = 6;
  std::uint64_t seed = 0;
  /// Fall back to one mean-sized anchor when there are too few distinct boxes.
  bool allow_single = false;
  KMeansOptions kmeans;
  SilhouetteOptions silhouette;
};

/// Clusters every (w, h) pair with k-means and keeps the k whose clustering
/// has the best silhouette. Centroids become the anchor sizes.
inline AnchorSet estimate_anchors(const Dataset& ds, const AnchorEstimateOptions& opt = {}) {
  Matrix pts(0, 2);
  for (const auto& [w, h] : box_dimensions(ds)) pts.append_row(std::vector<double>{w, h});

  const std::size_t distinct = pts.rows() ? count_distinct_rows(pts) : 0;
  const bool enough = pts.rows() >= 3 && distinct >= 2;
  AnchorSet out;
  if (!enough) {
    if (!opt.allow_single || pts.rows() == 0)
      throw DomainError("insufficient distinct boxes for anchor estimation");
    AnchorSize mean;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      mean.w += pts(i, 0);
      mean.h += pts(i, 1);
    }
    mean.w /= static_cast<double>(pts.rows());
    mean.h /= static_cast<double>(pts.rows());
    out.sizes = {mean};
    out.k = 1;
    return out;
  }

  KMeansOptions km = opt.kmeans;
  km.seed = opt.seed;
  SilhouetteOptions sil = opt.silhouette;
  sil.seed = opt.seed;
  const KSelection sel = choose_k(pts, opt.k_min, opt.k_max, km, sil);
  out.k = sel.best_k;
  out.silhouette = sel.scores.at(sel.best_k);
  out.per_k_scores = sel.scores;
  for (std::size_t c = 0; c < sel.model.centroids.rows(); ++c)
    out.sizes.push_back({sel.model.centroids(c, 0), sel.model.centroids(c, 1)});
  std::stable_sort(out.sizes.begin(), out.sizes.end(), [](const AnchorSize& a, const AnchorSize& b) {
    const double aa = a.w * a.h, ab = b.w * b.h;
    return aa < ab || (aa == ab && a.w < b.w);
  });
  return out;
}

enum class LogBase { Natural, Two };

struct RegressionDelta {
  double dw = 0.0;
  double dh = 0.0;

  double squared_norm() const noexcept { return dw * dw + dh * dh; }
};

/// Width/height log-ratio of a ground-truth box against an anchor size.
inline RegressionDelta regression_deltas(double w, double h, const AnchorSize& anchor,
                                         LogBase base = LogBase::Natural) {
  if (!(w > 0.0) || !(h > 0.0) || !(anchor.w > 0.0) || !(anchor.h > 0.0))
    throw DomainError("regression deltas need positive dimensions");
  if (base == LogBase::Two) return {std::log2(w / anchor.w), std::log2(h / anchor.h)};
  return {std::log(w / anchor.w), std::log(h / anchor.h)};
}

inline RegressionDelta regression_deltas(const BBox& gt, const AnchorSize& anchor,
                                         LogBase base = LogBase::Natural) {
  return regression_deltas(gt.w, gt.h, anchor, base);
}

/// Index of the anchor with the smallest squared delta norm (lowest index on ties).
inline std::size_t best_fit_anchor(const BBox& gt, const AnchorSet& anchors,
                                   LogBase base = LogBase::Natural) {
  std::size_t best = 0;
  double best_norm = 0.0;
  for (std::size_t i = 0; i < anchors.sizes.size(); ++i) {
    const double n = regression_deltas(gt, anchors.sizes[i], base).squared_norm();
    if (i == 0 || n < best_norm) {
      best = i;
      best_norm = n;
    }
  }
  return best;
}

struct FitReport {
  std::size_t annotations = 0;
  double mean_abs_dw = 0.0;
  double mean_abs_dh = 0.0;
  double max_abs_delta = 0.0;
  double mean_squared_delta = 0.0;  ///< mean of dw^2 + dh^2
  std::vector<std::size_t> assignment_counts;  ///< per anchor, in AnchorSet order
};

inline FitReport anchor_fit_report(const Dataset& ds, const AnchorSet& anchors,
                                   LogBase base = LogBase::Natural) {
  validate_anchor_set(anchors);
  FitReport rep;
  rep.assignment_counts.assign(anchors.sizes.size(), 0);
  for (const auto& img : ds.images) {
    for (const auto& a : img.annotations) {
      const std::size_t best = best_fit_anchor(a.box, anchors, base);
      const RegressionDelta d = regression_deltas(a.box, anchors.sizes[best], base);
      ++rep.assignment_counts[best];
      ++rep.annotations;
      rep.mean_abs_dw += std::abs(d.dw);
      rep.mean_abs_dh += std::abs(d.dh);
      rep.mean_squared_delta += d.squared_norm();
      rep.max_abs_delta = std::max({rep.max_abs_delta, std::abs(d.dw), std::abs(d.dh)});
    }
  }
  if (rep.annotations > 0) {
    const auto n = static_cast<double>(rep.annotations);
    rep.mean_abs_dw /= n;
    rep.mean_abs_dh /= n;
    rep.mean_squared_delta /= n;
  }
  return rep;
}

}  // namespace detcfg
