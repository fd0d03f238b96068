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
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace detcfg {

/// Axis-aligned box in image pixels, origin at the top-left corner.
struct BBox {
  double x = 0.0;  ///< left edge
  double y = 0.0;  ///< top edge
  double w = 0.0;
  double h = 0.0;

  double cx() const noexcept { return x + w / 2.0; }
  double cy() const noexcept { return y + h / 2.0; }
  double right() const noexcept { return x + w; }
  double bottom() const noexcept { return y + h; }
  double area() const noexcept { return w * h; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

using CategoryId = std::int64_t;

struct Annotation {
  BBox box;
  CategoryId category_id = 0;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct ImageRecord {
  std::string id;
  std::string file_name;
  double width = 0.0;
  double height = 0.0;
  std::optional<double> gsd;  ///< ground sampling distance, cm per pixel
  std::vector<Annotation> annotations;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// Annotated image collection. Immutable once built by a parser.
struct Dataset {
  std::vector<ImageRecord> images;
  std::map<CategoryId, std::string> categories;

  std::size_t annotation_count() const {
    std::size_t n = 0;
    for (const auto& img : images) n += img.annotations.size();
    return n;
  }

  const ImageRecord* find_image(const std::string& id) const {
    for (const auto& img : images)
      if (img.id == id) return &img;
    return nullptr;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct ValidationIssue {
  std::string image_id;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;
  std::map<CategoryId, std::size_t> counts;

  bool ok() const noexcept { return errors.empty(); }
};

/// Checks every hard invariant of the data model. Out-of-bounds boxes are
/// warnings only; they are kept untouched.
inline ValidationReport validate(const Dataset& ds) {
  ValidationReport rep;
  std::set<std::string> seen;
  for (const auto& img : ds.images) {
    if (!seen.insert(img.id).second) rep.errors.push_back({img.id, "duplicate image id"});
    if (!(img.width > 0.0) || !(img.height > 0.0))
      rep.errors.push_back({img.id, "non-positive image dimension"});
    if (img.gsd && !(*img.gsd > 0.0)) rep.errors.push_back({img.id, "non-positive gsd"});
    for (const auto& a : img.annotations) {
      const BBox& b = a.box;
      if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.w) ||
          !std::isfinite(b.h)) {
        rep.errors.push_back({img.id, "non-finite box coordinate"});
        continue;
      }
      if (!(b.w > 0.0) || !(b.h > 0.0))
        rep.errors.push_back({img.id, "non-positive box dimension"});
      if (b.x < 0.0 || b.y < 0.0) rep.errors.push_back({img.id, "negative box origin"});
      if (!ds.categories.contains(a.category_id))
        rep.errors.push_back(
            {img.id, "unknown category id " + std::to_string(a.category_id)});
      if (b.right() > img.width || b.bottom() > img.height)
        rep.warnings.push_back({img.id, "box extends beyond image bounds"});
      ++rep.counts[a.category_id];
    }
  }
  return rep;
}

/// min, 25%, median, 75%, max. Empty when there are no values.
struct Quantiles {
  std::vector<double> values;

  bool empty() const noexcept { return values.empty(); }
  double min() const { return values.at(0); }
  double q25() const { return values.at(1); }
  double median() const { return values.at(2); }
  double q75() const { return values.at(3); }
  double max() const { return values.at(4); }
};

/// Linear interpolation between closest ranks (numpy's default method).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline Quantiles five_number_summary(std::vector<double> values) {
  Quantiles out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) out.values.push_back(quantile_sorted(values, q));
  return out;
}

struct DatasetStats {
  std::size_t images = 0;
  std::size_t annotations = 0;
  std::map<std::string, std::size_t> per_category;  ///< keyed by category name
  Quantiles width;
  Quantiles height;

  friend bool operator==(const DatasetStats& a, const DatasetStats& b) {
    return a.images == b.images && a.annotations == b.annotations &&
           a.per_category == b.per_category && a.width.values == b.width.values &&
           a.height.values == b.height.values;
  }
};

inline DatasetStats dataset_stats(const Dataset& ds) {
  DatasetStats st;
  st.images = ds.images.size();
  std::vector<double> ws, hs;
  for (const auto& img : ds.images) {
    for (const auto& a : img.annotations) {
      const auto it = ds.categories.find(a.category_id);
      ++st.per_category[it != ds.categories.end() ? it->second
                                                  : std::to_string(a.category_id)];
      ws.push_back(a.box.w);
      hs.push_back(a.box.h);
    }
  }
  st.annotations = ws.size();
  st.width = five_number_summary(std::move(ws));
  st.height = five_number_summary(std::move(hs));
  return st;
}

/// Every (w, h) pair in image order, the input to anchor estimation.
inline std::vector<std::pair<double, double>> box_dimensions(const Dataset& ds) {
  std::vector<std::pair<double, double>> dims;
  dims.reserve(ds.annotation_count());
  for (const auto& img : ds.images)
    for (const auto& a : img.annotations) dims.emplace_back(a.box.w, a.box.h);
  return dims;
}

}  // namespace detcfg
