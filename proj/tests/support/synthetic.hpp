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

// Seeded synthetic inputs shared by the unit and acceptance suites.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "detcfg/dataset.hpp"
#include "detcfg/matrix.hpp"

namespace detcfg::testing {

inline Dataset single_class(std::vector<ImageRecord> images) {
  Dataset ds;
  ds.categories[1] = "bird";
  ds.images = std::move(images);
  return ds;
}

inline ImageRecord image(std::string id, double w, double h, std::vector<BBox> boxes = {}) {
  ImageRecord r;
  r.id = std::move(id);
  r.file_name = r.id + ".png";
  r.width = w;
  r.height = h;
  for (const auto& b : boxes) r.annotations.push_back({b, 1});
  return r;
}

/// Box of size (w, h) whose center is (cx, cy).
inline BBox centered(double cx, double cy, double w, double h) {
  return {cx - w / 2.0, cy - h / 2.0, w, h};
}

/// Up to `max_images` images of 64..512 px with at most `max_boxes` boxes in
/// total. Box centers lie inside the image; some boxes overhang the border.
inline Dataset random_dataset(std::mt19937_64& rng, int max_images = 20, int max_boxes = 200) {
  std::uniform_int_distribution<int> n_img(1, max_images);
  std::uniform_int_distribution<int> side(64, 512);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int images = n_img(rng);
  int budget = std::uniform_int_distribution<int>(0, max_boxes)(rng);
  std::vector<ImageRecord> out;
  for (int i = 0; i < images; ++i) {
    const double w = side(rng), h = side(rng);
    const int n = i + 1 == images ? budget
                                  : std::uniform_int_distribution<int>(0, std::max(budget, 0))(rng) /
                                        std::max(1, images - i);
    budget -= n;
    std::vector<BBox> boxes;
    for (int b = 0; b < n; ++b) {
      const double bw = 2.0 + unit(rng) * 60.0, bh = 2.0 + unit(rng) * 60.0;
      // Integer-ish centers make exact cell-boundary hits common.
      double cx = unit(rng) < 0.3 ? std::floor(unit(rng) * w) : unit(rng) * w;
      double cy = unit(rng) < 0.3 ? std::floor(unit(rng) * h) : unit(rng) * h;
      cx = std::max(cx, bw / 2.0);
      cy = std::max(cy, bh / 2.0);
      boxes.push_back(centered(cx, cy, bw, bh));
    }
    out.push_back(image("img" + std::to_string(i), w, h, boxes));
  }
  return single_class(std::move(out));
}

/// `per_mode` boxes jittered (sigma px) around each (w, h) mode, scattered
/// over 512x512 images of 25 boxes each.
inline Dataset planted_modes(std::uint64_t seed, const std::vector<std::pair<double, double>>& modes,
                             int per_mode, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, sigma);
  std::uniform_real_distribution<double> pos(40.0, 470.0);
  std::vector<BBox> boxes;
  for (const auto& [w, h] : modes)
    for (int i = 0; i < per_mode; ++i) {
      const double bw = std::max(1.0, w + jitter(rng)), bh = std::max(1.0, h + jitter(rng));
      boxes.push_back(centered(pos(rng), pos(rng), bw, bh));
    }
  std::shuffle(boxes.begin(), boxes.end(), rng);
  std::vector<ImageRecord> images;
  for (std::size_t i = 0; i < boxes.size(); i += 25) {
    std::vector<BBox> chunk(boxes.begin() + static_cast<std::ptrdiff_t>(i),
                            boxes.begin() + static_cast<std::ptrdiff_t>(std::min(i + 25, boxes.size())));
    images.push_back(image("p" + std::to_string(i / 25), 512, 512, chunk));
  }
  return single_class(std::move(images));
}

inline Dataset planted_two_mode(std::uint64_t seed, int total = 200) {
  return planted_modes(seed, {{50.0, 50.0}, {20.0, 20.0}}, total / 2);
}

/// Isotropic Gaussian blobs in `dim` dimensions, `per` points each.
inline Matrix gaussian_blobs(std::uint64_t seed, const std::vector<std::vector<double>>& centers,
                             int per, double sigma) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Matrix m(0, centers.front().size());
  for (const auto& c : centers)
    for (int i = 0; i < per; ++i) {
      std::vector<double> p(c);
      for (double& v : p) v += noise(rng);
      m.append_row(p);
    }
  return m;
}

}  // namespace detcfg::testing
