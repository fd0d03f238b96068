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

// Feature-map level selection. Every annotation is assigned to the grid cell
// holding its box center at each candidate pyramid level; the resulting
// per-cell occupancy histogram is scored so that cells holding up to
// `num_anchors` objects are rewarded, overfull cells are charged per excess
// object, and empty cells pay a small penalty.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "detcfg/dataset.hpp"
#include "detcfg/error.hpp"

namespace detcfg {

struct PyramidLevel {
  std::string name;
  std::int64_t stride = 1;  ///< pixels per grid cell

  friend bool operator==(const PyramidLevel&, const PyramidLevel&) = default;
};

/// RetinaNet's P3..P7.
inline std::vector<PyramidLevel> default_pyramid_levels() {
  return {{"P3", 8}, {"P4", 16}, {"P5", 32}, {"P6", 64}, {"P7", 128}};
}

inline void validate_levels(const std::vector<PyramidLevel>& levels) {
  std::set<std::string> names;
  for (const auto& l : levels) {
    if (l.stride < 1) throw DomainError("stride of level '" + l.name + "' must be >= 1");
    if (!names.insert(l.name).second) throw DomainError("duplicate level name '" + l.name + "'");
  }
}

struct GridCell {
  std::int64_t col = 0;
  std::int64_t row = 0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

inline std::int64_t grid_extent(double pixels, std::int64_t stride) {
  return static_cast<std::int64_t>(std::ceil(pixels / static_cast<double>(stride)));
}

/// The cell containing the box center. A center on a cell boundary belongs to
/// the higher cell; centers on or past the far image edge clamp to the last cell.
inline GridCell find_overlapped_grid(const BBox& box, const PyramidLevel& level, double image_w,
                                     double image_h) {
  const auto s = static_cast<double>(level.stride);
  const std::int64_t cols = std::max<std::int64_t>(grid_extent(image_w, level.stride), 1);
  const std::int64_t rows = std::max<std::int64_t>(grid_extent(image_h, level.stride), 1);
  const auto col = static_cast<std::int64_t>(std::floor(box.cx() / s));
  const auto row = static_cast<std::int64_t>(std::floor(box.cy() / s));
  return {std::clamp<std::int64_t>(col, 0, cols - 1), std::clamp<std::int64_t>(row, 0, rows - 1)};
}

struct GridOverlapHistogram {
  PyramidLevel level;
  std::map<std::int64_t, std::int64_t> freq;  ///< objects per cell -> number of such cells
  std::int64_t zero_cells = 0;
  std::int64_t total_cells = 0;

  std::int64_t annotations() const {
    std::int64_t n = 0;
    for (const auto& [k, c] : freq) n += k * c;
    return n;
  }

  friend bool operator==(const GridOverlapHistogram&, const GridOverlapHistogram&) = default;
};

struct ScoreConfig {
  double penalty_factor = 0.0001;
  double weighting_factor = -1.0;
  int num_anchors = 1;

  friend bool operator==(const ScoreConfig&, const ScoreConfig&) = default;
};

/// Occupancy histogram of one level over every image of the dataset.
inline GridOverlapHistogram accumulate_level(const Dataset& ds, const PyramidLevel& level) {
  GridOverlapHistogram hist;
  hist.level = level;
  std::vector<std::int64_t> cells;
  for (const auto& img : ds.images) {
    const std::int64_t cols = grid_extent(img.width, level.stride);
    const std::int64_t rows = grid_extent(img.height, level.stride);
    const std::int64_t n_cells = cols * rows;
    hist.total_cells += n_cells;

    // Sparse count: sort the occupied cell indices and measure runs.
    cells.clear();
    for (const auto& a : img.annotations) {
      const GridCell c = find_overlapped_grid(a.box, level, img.width, img.height);
      cells.push_back(c.row * cols + c.col);
    }
    std::sort(cells.begin(), cells.end());
    std::int64_t occupied = 0;
    for (std::size_t i = 0; i < cells.size();) {
      std::size_t j = i;
      while (j < cells.size() && cells[j] == cells[i]) ++j;
      ++hist.freq[static_cast<std::int64_t>(j - i)];
      ++occupied;
      i = j;
    }
    hist.zero_cells += n_cells - occupied;
  }
  return hist;
}

inline std::vector<GridOverlapHistogram> accumulate_overlaps(
    const Dataset& ds, const std::vector<PyramidLevel>& levels) {
  if (ds.images.empty()) throw DomainError("no annotations to score");
  validate_levels(levels);
  std::vector<GridOverlapHistogram> out;
  out.reserve(levels.size());
  for (const auto& level : levels) out.push_back(accumulate_level(ds, level));
  return out;
}

inline double calculate_feature_map_score(const GridOverlapHistogram& hist,
                                          const ScoreConfig& cfg) {
  if (cfg.num_anchors < 1) throw DomainError("num_anchors must be >= 1");
  double desired = 0.0;
  double excessive = 0.0;
  for (const auto& [k, cells] : hist.freq) {
    if (k <= cfg.num_anchors) {
      desired += static_cast<double>(cells);
    } else {
      excessive += static_cast<double>(cells) * static_cast<double>(k - cfg.num_anchors) *
                   cfg.weighting_factor;
    }
  }
  const double penalty = static_cast<double>(hist.zero_cells) * cfg.penalty_factor;
  return desired + excessive - penalty;
}

struct LevelScore {
  PyramidLevel level;
  double score = 0.0;
  GridOverlapHistogram histogram;
};

struct FeatureMapSelection {
  PyramidLevel best;
  std::vector<LevelScore> scores;  ///< in candidate order
};

/// Scores every candidate and returns the maximum; ties go to the smaller stride.
inline FeatureMapSelection find_optimal_feature_map_size(const Dataset& ds,
                                                         const std::vector<PyramidLevel>& levels,
                                                         const ScoreConfig& cfg) {
  if (levels.empty()) throw DomainError("no candidate pyramid levels");
  const auto hists = accumulate_overlaps(ds, levels);
  FeatureMapSelection sel;
  std::size_t best = 0;
  for (std::size_t i = 0; i < hists.size(); ++i) {
    sel.scores.push_back({levels[i], calculate_feature_map_score(hists[i], cfg), hists[i]});
    if (i == 0) continue;
    const auto& cand = sel.scores[i];
    const auto& cur = sel.scores[best];
    if (cand.score > cur.score ||
        (cand.score == cur.score && cand.level.stride < cur.level.stride))
      best = i;
  }
  sel.best = sel.scores[best].level;
  return sel;
}

}  // namespace detcfg
