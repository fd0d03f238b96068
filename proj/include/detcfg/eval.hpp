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

// Detection metrics: best F1 over the confidence sweep and all-point
// interpolated average precision, both at a single IoU threshold.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "detcfg/csv.hpp"
#include "detcfg/dataset.hpp"
#include "detcfg/error.hpp"
#include "detcfg/matching.hpp"

namespace detcfg {

struct Detection {
  std::string image_id;
  BBox bbox;
  double confidence = 0.0;
  CategoryId category_id = 0;
};

struct GroundTruth {
  std::string image_id;
  BBox bbox;
  CategoryId category_id = 0;
};

inline std::vector<GroundTruth> ground_truths(const Dataset& ds) {
  std::vector<GroundTruth> out;
  for (const auto& img : ds.images)
    for (const auto& a : img.annotations) out.push_back({img.id, a.box, a.category_id});
  return out;
}

/// Indices sorted by confidence descending; equal confidences keep input order.
inline std::vector<std::size_t> confidence_order(std::span<const Detection> preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });
  return order;
}

/// Greedy one-to-one matching for one image and category. Returns a TP flag
/// per prediction, in input order.
inline std::vector<bool> match_detections(std::span<const Detection> preds,
                                          std::span<const BBox> gts, double iou_thr = 0.3) {
  std::vector<bool> tp(preds.size(), false);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t p : confidence_order(preds)) {
    double best = -1.0;
    std::size_t best_g = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(preds[p].bbox, gts[g]);
      if (v > best) {
        best = v;
        best_g = g;
      }
    }
    if (best_g < gts.size() && best >= iou_thr) {
      taken[best_g] = true;
      tp[p] = true;
    }
  }
  return tp;
}

/// TP flags for predictions spread over many images and categories; matching
/// happens within each (image, category) group.
inline std::vector<bool> label_detections(std::span<const Detection> preds,
                                          std::span<const GroundTruth> gts, double iou_thr) {
  using Key = std::pair<std::string, CategoryId>;
  std::map<Key, std::vector<std::size_t>> pred_groups;
  std::map<Key, std::vector<BBox>> gt_groups;
  for (std::size_t i = 0; i < preds.size(); ++i)
    pred_groups[{preds[i].image_id, preds[i].category_id}].push_back(i);
  for (const auto& g : gts) gt_groups[{g.image_id, g.category_id}].push_back(g.bbox);

  std::vector<bool> tp(preds.size(), false);
  std::vector<Detection> group;
  for (const auto& [key, idx] : pred_groups) {
    const auto git = gt_groups.find(key);
    if (git == gt_groups.end()) continue;
    group.clear();
    for (std::size_t i : idx) group.push_back(preds[i]);
    const auto flags = match_detections(group, git->second, iou_thr);
    for (std::size_t j = 0; j < idx.size(); ++j) tp[idx[j]] = flags[j];
  }
  return tp;
}

struct F1Point {
  double f1 = 0.0;
  double threshold = std::numeric_limits<double>::infinity();
  double precision = 0.0;
  double recall = 0.0;
};

inline double f1_of(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

/// Sweeps every distinct confidence (and +inf, the empty operating point) and
/// returns the maximum F1. Earlier (higher) thresholds win ties.
inline F1Point best_f1(std::span<const Detection> preds, std::span<const GroundTruth> gts,
                       double iou_thr = 0.3) {
  if (gts.empty()) throw DomainError("undefined recall: no ground truths");
  const auto tp = label_detections(preds, gts, iou_thr);
  const auto order = confidence_order(preds);
  const auto n_gt = static_cast<double>(gts.size());

  F1Point best;  // the +inf point: nothing predicted
  std::size_t tps = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (tp[order[i]]) ++tps;
    const double conf = preds[order[i]].confidence;
    if (i + 1 < order.size() && preds[order[i + 1]].confidence == conf) continue;
    const double precision = static_cast<double>(tps) / static_cast<double>(i + 1);
    const double recall = static_cast<double>(tps) / n_gt;
    const double f1 = f1_of(precision, recall);
    if (f1 > best.f1) best = {f1, conf, precision, recall};
  }
  return best;
}

struct ApResult {
  std::map<CategoryId, double> per_category;
  double map = 0.0;  ///< in [0, 1]
  std::vector<std::string> warnings;
};

/// All-point interpolated AP over ranked predictions of one category.
inline double average_precision_ranked(const std::vector<bool>& ranked_tp, std::size_t n_gt) {
  if (n_gt == 0) return 0.0;
  std::vector<double> precision, recall;
  std::size_t tps = 0;
  for (std::size_t i = 0; i < ranked_tp.size(); ++i) {
    if (ranked_tp[i]) ++tps;
    precision.push_back(static_cast<double>(tps) / static_cast<double>(i + 1));
    recall.push_back(static_cast<double>(tps) / static_cast<double>(n_gt));
  }
  for (std::size_t i = precision.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

/// Per-category AP; mAP is the unweighted mean over categories with ground truth.
inline ApResult average_precision(std::span<const Detection> preds,
                                  std::span<const GroundTruth> gts, double iou_thr = 0.3) {
  if (gts.empty()) throw DomainError("undefined recall: no ground truths");
  const auto tp = label_detections(preds, gts, iou_thr);
  const auto order = confidence_order(preds);
  std::map<CategoryId, std::size_t> gt_count;
  for (const auto& g : gts) ++gt_count[g.category_id];

  std::map<CategoryId, std::vector<bool>> ranked;
  for (std::size_t i : order) ranked[preds[i].category_id].push_back(tp[i]);

  ApResult res;
  for (const auto& [cat, _] : ranked)
    if (!gt_count.contains(cat))
      res.warnings.push_back("category " + std::to_string(cat) +
                             " has predictions but no ground truth; excluded from mAP");
  double sum = 0.0;
  for (const auto& [cat, n] : gt_count) {
    const auto it = ranked.find(cat);
    const double ap = it == ranked.end() ? 0.0 : average_precision_ranked(it->second, n);
    res.per_category[cat] = ap;
    sum += ap;
  }
  res.map = sum / static_cast<double>(gt_count.size());
  return res;
}

struct EvalResult {
  double best_f1 = 0.0;
  double best_threshold = std::numeric_limits<double>::infinity();
  double precision_at_best = 0.0;
  double recall_at_best = 0.0;
  std::map<CategoryId, double> ap_per_category;
  double map = 0.0;
  double iou_threshold = 0.3;
  std::vector<std::string> warnings;
};

inline EvalResult evaluate(std::span<const Detection> preds, std::span<const GroundTruth> gts,
                           double iou_thr = 0.3) {
  const F1Point f = best_f1(preds, gts, iou_thr);
  ApResult ap = average_precision(preds, gts, iou_thr);
  return {f.f1,   f.threshold, f.precision, f.recall, std::move(ap.per_category),
          ap.map, iou_thr,     std::move(ap.warnings)};
}

inline constexpr std::string_view kDetectionCsvHeader = "image_id,x,y,w,h,confidence,category";

/// Reads `image_id,x,y,w,h,confidence,category`. The category field is
/// matched against the dataset's category names first, then read as a
/// numeric id. Every image id must exist in the dataset.
inline std::vector<Detection> parse_detections(std::string_view text, const Dataset& ds) {
  const csv::Table t = csv::read_table(text);
  if (t.header != csv::split(kDetectionCsvHeader, 1))
    throw ParseError("unexpected header, expected '" + std::string(kDetectionCsvHeader) + "'", 1,
                     "row");
  std::unordered_map<std::string, CategoryId> by_name;
  for (const auto& [id, name] : ds.categories) by_name.emplace(name, id);
  std::unordered_map<std::string, bool> known;
  for (const auto& img : ds.images) known.emplace(img.id, true);

  std::vector<Detection> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::size_t row_no = t.row_numbers[r];
    if (f.size() != 7) throw ParseError("expected 7 fields", row_no, "row");
    Detection d;
    d.image_id = f[0];
    if (!known.contains(d.image_id))
      throw StructuralError("detection references unknown image id '" + d.image_id + "'");
    d.bbox = {csv::parse_double(f[1], row_no, "x"), csv::parse_double(f[2], row_no, "y"),
              csv::parse_double(f[3], row_no, "w"), csv::parse_double(f[4], row_no, "h")};
    d.confidence = csv::parse_double(f[5], row_no, "confidence");
    if (d.confidence < 0.0 || d.confidence > 1.0)
      throw StructuralError("confidence outside [0, 1] at row " + std::to_string(row_no));
    if (auto it = by_name.find(f[6]); it != by_name.end()) {
      d.category_id = it->second;
    } else {
      const auto v = csv::to_double(f[6]);
      if (!v || std::floor(*v) != *v)
        throw StructuralError("unknown category '" + f[6] + "' at row " + std::to_string(row_no));
      d.category_id = static_cast<CategoryId>(*v);
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace detcfg
