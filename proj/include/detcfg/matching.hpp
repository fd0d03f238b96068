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

// Anchor assignment simulator: lays an anchor grid over each image and labels
// anchors positive / negative / ignored by IoU against the ground truth, the
// way a RetinaNet-style target assigner would.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "detcfg/anchors.hpp"
#include "detcfg/dataset.hpp"
#include "detcfg/error.hpp"
#include "detcfg/featuremap.hpp"

namespace detcfg {

inline double intersection_area(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

inline double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

/// One box per (cell, anchor size), row-major over cells, anchors in set
/// order. Boxes are centered on the cell center and left unclipped unless
/// `clip` is set; clipped boxes that fall entirely outside are dropped.
inline std::vector<BBox> generate_anchor_grid(const PyramidLevel& level, double image_w,
                                              double image_h, const AnchorSet& anchors,
                                              bool clip = false) {
  const std::int64_t cols = grid_extent(image_w, level.stride);
  const std::int64_t rows = grid_extent(image_h, level.stride);
  const auto s = static_cast<double>(level.stride);
  std::vector<BBox> out;
  out.reserve(static_cast<std::size_t>(cols * rows) * anchors.sizes.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      const double cx = (static_cast<double>(c) + 0.5) * s;
      const double cy = (static_cast<double>(r) + 0.5) * s;
      for (const auto& a : anchors.sizes) {
        BBox b{cx - a.w / 2.0, cy - a.h / 2.0, a.w, a.h};
        if (clip) {
          const double x0 = std::max(b.x, 0.0), y0 = std::max(b.y, 0.0);
          const double x1 = std::min(b.right(), image_w), y1 = std::min(b.bottom(), image_h);
          if (x1 <= x0 || y1 <= y0) continue;
          b = {x0, y0, x1 - x0, y1 - y0};
        }
        out.push_back(b);
      }
    }
  }
  return out;
}

struct MatchConfig {
  double positive_iou = 0.5;
  double negative_iou = 0.4;
  bool force_match = false;  ///< give every gt its best anchor even below threshold
  bool clip_anchors = false;

  friend bool operator==(const MatchConfig&, const MatchConfig&) = default;
};

inline void validate_match_config(const MatchConfig& cfg) {
  if (!(cfg.negative_iou >= 0.0 && cfg.negative_iou <= cfg.positive_iou &&
        cfg.positive_iou <= 1.0))
    throw DomainError("match thresholds must satisfy 0 <= negative_iou <= positive_iou <= 1");
}

struct MatchStats {
  std::int64_t total_anchors = 0;
  std::int64_t positives = 0;
  std::int64_t negatives = 0;
  std::int64_t ignored = 0;
  std::int64_t matched_gts = 0;
  std::int64_t unmatched_gts = 0;
  double sum_best_iou = 0.0;  ///< over ground truths; kept for aggregation

  std::int64_t gts() const noexcept { return matched_gts + unmatched_gts; }
  double mean_best_iou() const noexcept {
    return gts() > 0 ? sum_best_iou / static_cast<double>(gts()) : 0.0;
  }

  MatchStats& operator+=(const MatchStats& o) {
    total_anchors += o.total_anchors;
    positives += o.positives;
    negatives += o.negatives;
    ignored += o.ignored;
    matched_gts += o.matched_gts;
    unmatched_gts += o.unmatched_gts;
    sum_best_iou += o.sum_best_iou;
    return *this;
  }

  friend bool operator==(const MatchStats&, const MatchStats&) = default;
};

/// Labels each anchor by its highest-IoU ground truth.
inline MatchStats match_anchors(std::span<const BBox> anchors, std::span<const BBox> gts,
                                const MatchConfig& cfg) {
  validate_match_config(cfg);
  MatchStats st;
  st.total_anchors = static_cast<std::int64_t>(anchors.size());
  if (gts.empty()) {
    st.negatives = st.total_anchors;
    return st;
  }

  enum Label : unsigned char { kNegative, kIgnored, kPositive };
  std::vector<Label> labels(anchors.size(), kNegative);
  std::vector<bool> gt_matched(gts.size(), false);
  std::vector<double> gt_best(gts.size(), 0.0);
  std::vector<std::size_t> gt_best_anchor(gts.size(), anchors.size());

  for (std::size_t a = 0; a < anchors.size(); ++a) {
    double best = 0.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = iou(anchors[a], gts[g]);
      if (v > gt_best[g]) {
        gt_best[g] = v;
        gt_best_anchor[g] = a;
      }
      if (best_gt == gts.size() || v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best >= cfg.positive_iou) {
      labels[a] = kPositive;
      gt_matched[best_gt] = true;
    } else if (best >= cfg.negative_iou) {
      labels[a] = kIgnored;
    }
  }

  if (cfg.force_match) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_matched[g] || gt_best_anchor[g] == anchors.size()) continue;
      labels[gt_best_anchor[g]] = kPositive;
      gt_matched[g] = true;
    }
  }

  for (Label l : labels) {
    if (l == kPositive) ++st.positives;
    else if (l == kIgnored) ++st.ignored;
    else ++st.negatives;
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gt_matched[g]) ++st.matched_gts;
    else ++st.unmatched_gts;
    st.sum_best_iou += gt_best[g];
  }
  return st;
}

/// Aggregated simulation of one (level, anchor set) configuration over a dataset.
inline MatchStats match_dataset(const Dataset& ds, const PyramidLevel& level,
                                const AnchorSet& anchors, const MatchConfig& cfg) {
  MatchStats total;
  std::vector<BBox> gts;
  for (const auto& img : ds.images) {
    const auto grid = generate_anchor_grid(level, img.width, img.height, anchors, cfg.clip_anchors);
    gts.clear();
    for (const auto& a : img.annotations) gts.push_back(a.box);
    total += match_anchors(grid, gts, cfg);
  }
  return total;
}

struct ComparisonEntry {
  PyramidLevel level;
  AnchorSet anchors;
  MatchStats stats;
  std::optional<double> negatives_per_positive;  ///< absent when there are no positives
  double coverage = 0.0;                         ///< matched_gts / gts
};

struct ComparisonReport {
  std::vector<ComparisonEntry> entries;
};

inline ComparisonReport compare_configurations(
    const Dataset& ds, const std::vector<std::pair<PyramidLevel, AnchorSet>>& configs,
    const MatchConfig& cfg) {
  if (configs.empty()) throw DomainError("no configurations to compare");
  validate_match_config(cfg);
  ComparisonReport rep;
  for (const auto& [level, anchors] : configs) {
    validate_levels({level});
    validate_anchor_set(anchors);
    ComparisonEntry e{level, anchors, match_dataset(ds, level, anchors, cfg), std::nullopt, 0.0};
    if (e.stats.positives > 0)
      e.negatives_per_positive =
          static_cast<double>(e.stats.negatives) / static_cast<double>(e.stats.positives);
    if (e.stats.gts() > 0)
      e.coverage = static_cast<double>(e.stats.matched_gts) / static_cast<double>(e.stats.gts());
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

}  // namespace detcfg
