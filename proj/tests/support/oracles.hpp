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

// Brute-force reference implementations. They deliberately take the slow,
// obvious route (dense arrays, full re-evaluation per threshold) and share
// no code with the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "detcfg/dataset.hpp"

namespace detcfg::oracle {

struct DenseLevelResult {
  std::map<std::int64_t, std::int64_t> freq;
  std::int64_t zero_cells = 0;
  std::int64_t total_cells = 0;
  double score = 0.0;
};

/// Explicit per-image 2-D counter arrays; the score is accumulated cell by cell
/// with compensated summation so its own rounding stays far below 1e-12.
inline DenseLevelResult dense_grid(const Dataset& ds, std::int64_t stride, int num_anchors,
                                   double penalty = 0.0001, double weighting = -1.0) {
  DenseLevelResult out;
  double sum = 0.0, comp = 0.0;
  auto add = [&](double v) {  // Neumaier
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  };
  for (const auto& img : ds.images) {
    std::int64_t cols = 0, rows = 0;
    while (static_cast<double>(cols * stride) < img.width) ++cols;
    while (static_cast<double>(rows * stride) < img.height) ++rows;
    std::vector<std::vector<std::int64_t>> grid(rows, std::vector<std::int64_t>(cols, 0));
    for (const auto& a : img.annotations) {
      const double cx = a.box.x + a.box.w * 0.5, cy = a.box.y + a.box.h * 0.5;
      std::int64_t c = static_cast<std::int64_t>(std::floor(cx / static_cast<double>(stride)));
      std::int64_t r = static_cast<std::int64_t>(std::floor(cy / static_cast<double>(stride)));
      c = c < 0 ? 0 : (c >= cols ? cols - 1 : c);
      r = r < 0 ? 0 : (r >= rows ? rows - 1 : r);
      grid[r][c] += 1;
    }
    for (const auto& row : grid)
      for (std::int64_t v : row) {
        ++out.total_cells;
        if (v == 0) {
          ++out.zero_cells;
          add(-penalty);
        } else {
          ++out.freq[v];
          add(v <= num_anchors ? 1.0 : weighting * static_cast<double>(v - num_anchors));
        }
      }
  }
  out.score = sum + comp;
  return out;
}

inline double corner_iou(const BBox& a, const BBox& b) {
  const double x1 = std::max(a.x, b.x), y1 = std::max(a.y, b.y);
  const double x2 = std::min(a.x + a.w, b.x + b.w), y2 = std::min(a.y + a.h, b.y + b.h);
  const double inter = (x2 > x1 && y2 > y1) ? (x2 - x1) * (y2 - y1) : 0.0;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct MatchCounts {
  std::int64_t positives = 0, negatives = 0, ignored = 0, matched = 0, unmatched = 0;
  double sum_best = 0.0;
};

/// Full IoU matrix, then labels read off row and column maxima.
inline MatchCounts brute_match(const std::vector<BBox>& anchors, const std::vector<BBox>& gts,
                               double pos, double neg) {
  MatchCounts mc;
  std::vector<std::vector<double>> m(anchors.size(), std::vector<double>(gts.size()));
  for (std::size_t a = 0; a < anchors.size(); ++a)
    for (std::size_t g = 0; g < gts.size(); ++g) m[a][g] = corner_iou(anchors[a], gts[g]);
  std::set<std::size_t> matched;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    double best = 0.0;
    std::size_t arg = 0;
    for (std::size_t g = 0; g < gts.size(); ++g)
      if (m[a][g] > best) {
        best = m[a][g];
        arg = g;
      }
    if (gts.empty()) {
      ++mc.negatives;
    } else if (best >= pos) {
      ++mc.positives;
      matched.insert(arg);
    } else if (best >= neg) {
      ++mc.ignored;
    } else {
      ++mc.negatives;
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    double best = 0.0;
    for (std::size_t a = 0; a < anchors.size(); ++a) best = std::max(best, m[a][g]);
    mc.sum_best += best;
    if (matched.count(g)) ++mc.matched;
    else ++mc.unmatched;
  }
  return mc;
}

struct Pred {
  std::string image;
  BBox box;
  double conf;
  std::int64_t cat;
};

struct Gt {
  std::string image;
  BBox box;
  std::int64_t cat;
};

/// TP count of a prediction subset, matched greedily from scratch.
inline std::int64_t count_tp(std::vector<Pred> preds, const std::vector<Gt>& gts, double thr) {
  std::stable_sort(preds.begin(), preds.end(),
                   [](const Pred& a, const Pred& b) { return a.conf > b.conf; });
  std::vector<bool> used(gts.size(), false);
  std::int64_t tp = 0;
  for (const auto& p : preds) {
    double best = -1.0;
    std::size_t arg = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].image != p.image || gts[g].cat != p.cat) continue;
      const double v = corner_iou(p.box, gts[g].box);
      if (v > best) {
        best = v;
        arg = g;
      }
    }
    if (arg < gts.size() && best >= thr) {
      used[arg] = true;
      ++tp;
    }
  }
  return tp;
}

struct F1Ref {
  double f1 = 0.0, threshold = std::numeric_limits<double>::infinity(), precision = 0.0,
         recall = 0.0;
};

/// Re-evaluates every confidence threshold independently.
inline F1Ref exhaustive_best_f1(const std::vector<Pred>& preds, const std::vector<Gt>& gts,
                                double thr) {
  std::set<double, std::greater<double>> thresholds;
  for (const auto& p : preds) thresholds.insert(p.conf);
  F1Ref best;
  for (double t : thresholds) {
    std::vector<Pred> kept;
    for (const auto& p : preds)
      if (p.conf >= t) kept.push_back(p);
    const auto tp = static_cast<double>(count_tp(kept, gts, thr));
    const double prec = tp / static_cast<double>(kept.size());
    const double rec = tp / static_cast<double>(gts.size());
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    if (f1 > best.f1) best = {f1, t, prec, rec};
  }
  return best;
}

/// AP of one category from every prefix of the ranked list, each prefix
/// matched from scratch, and the envelope taken by direct maximization.
inline double exhaustive_ap(std::vector<Pred> preds, const std::vector<Gt>& gts, double thr) {
  if (gts.empty()) return 0.0;
  std::stable_sort(preds.begin(), preds.end(),
                   [](const Pred& a, const Pred& b) { return a.conf > b.conf; });
  std::vector<double> rec, prec;
  for (std::size_t m = 1; m <= preds.size(); ++m) {
    std::vector<Pred> prefix(preds.begin(), preds.begin() + static_cast<std::ptrdiff_t>(m));
    const auto tp = static_cast<double>(count_tp(prefix, gts, thr));
    rec.push_back(tp / static_cast<double>(gts.size()));
    prec.push_back(tp / static_cast<double>(m));
  }
  std::set<double> levels(rec.begin(), rec.end());
  double ap = 0.0, prev = 0.0;
  for (double r : levels) {
    if (r <= 0.0) continue;
    double pmax = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i)
      if (rec[i] >= r) pmax = std::max(pmax, prec[i]);
    ap += (r - prev) * pmax;
    prev = r;
  }
  return ap;
}

}  // namespace detcfg::oracle
