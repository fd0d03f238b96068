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

// Cluster-balanced training-image sampling. Per-image descriptors (external
// embeddings reduced by PCA, plus annotation count and optional auxiliary
// columns) are z-scored and clustered; subsets are then drawn evenly across
// clusters, or deliberately from only some clusters to build biased baselines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "detcfg/cluster.hpp"
#include "detcfg/csv.hpp"
#include "detcfg/dataset.hpp"
#include "detcfg/error.hpp"
#include "detcfg/matrix.hpp"
#include "detcfg/pca.hpp"
#include "detcfg/random.hpp"

namespace detcfg {

/// Named numeric columns keyed by image id. Used for embeddings
/// (`image_id,f0,f1,...`) and auxiliary features (`image_id,<name>,...`).
struct FeatureTable {
  std::vector<std::string> column_names;
  std::map<std::string, std::vector<double>> rows;

  std::size_t dim() const noexcept { return column_names.size(); }
};

using EmbeddingTable = FeatureTable;

inline FeatureTable parse_feature_table(std::string_view text, const char* what) {
  const csv::Table t = csv::read_table(text);
  if (t.header.empty() || t.header.front() != "image_id")
    throw ParseError(std::string(what) + " header must start with 'image_id'", 1, "row");
  FeatureTable out;
  out.column_names.assign(t.header.begin() + 1, t.header.end());
  if (out.column_names.empty() ||
      (out.column_names.size() == 1 && out.column_names.front().empty()))
    throw StructuralError(std::string("zero-dimensional ") + what);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::size_t row_no = t.row_numbers[r];
    if (f.size() != t.header.size())
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " +
                           std::to_string(f.size()),
                       row_no, "row");
    std::vector<double> v;
    v.reserve(out.dim());
    for (std::size_t c = 1; c < f.size(); ++c) v.push_back(csv::parse_double(f[c], row_no, t.header[c]));
    if (!out.rows.emplace(f[0], std::move(v)).second)
      throw StructuralError("duplicate image id '" + f[0] + "' in " + what);
  }
  return out;
}

inline EmbeddingTable load_embeddings(std::string_view text) {
  return parse_feature_table(text, "embeddings");
}

inline FeatureTable load_aux_features(std::string_view text) {
  return parse_feature_table(text, "auxiliary features");
}

/// Stand-in descriptor when no embeddings are available: annotation count and
/// the quartiles of box width and height per image (zeros for empty images).
inline EmbeddingTable fallback_descriptors(const Dataset& ds) {
  EmbeddingTable t;
  t.column_names = {"count", "w_q25", "w_q50", "w_q75", "h_q25", "h_q50", "h_q75"};
  for (const auto& img : ds.images) {
    std::vector<double> ws, hs;
    for (const auto& a : img.annotations) {
      ws.push_back(a.box.w);
      hs.push_back(a.box.h);
    }
    const Quantiles qw = five_number_summary(ws), qh = five_number_summary(hs);
    std::vector<double> row{static_cast<double>(img.annotations.size())};
    if (qw.empty()) {
      row.insert(row.end(), 6, 0.0);
    } else {
      row.insert(row.end(), {qw.q25(), qw.median(), qw.q75(), qh.q25(), qh.median(), qh.q75()});
    }
    t.rows[img.id] = std::move(row);
  }
  return t;
}

struct FeatureMatrix {
  std::vector<std::string> image_ids;  ///< dataset order
  Matrix rows;                         ///< n x m, z-scored
  std::vector<std::string> column_names;
  std::vector<std::pair<double, double>> normalization;  ///< (mean, stddev) per kept column
  std::vector<double> pca_explained_variance_ratio;
  std::vector<std::string> warnings;
};

/// PCA-reduces the embeddings, appends annotation_count and any auxiliary
/// columns, then z-scores every column with the population stddev. Constant
/// columns are dropped with a warning.
inline FeatureMatrix assemble_features(const Dataset& ds, const EmbeddingTable& emb,
                                       const FeatureTable* aux = nullptr,
                                       PcaRetain retain = {}) {
  const std::size_t n = ds.images.size();
  if (n < 2) throw DomainError("feature assembly needs at least 2 images");
  if (emb.dim() == 0) throw DomainError("zero-dimensional embeddings");

  std::string missing;
  std::size_t n_missing = 0;
  for (const auto& img : ds.images)
    if (!emb.rows.contains(img.id)) {
      missing += (n_missing++ ? ", " : "") + img.id;
    }
  if (n_missing) throw StructuralError("missing embeddings for images: " + missing);
  if (aux) {
    for (const auto& img : ds.images)
      if (!aux->rows.contains(img.id)) missing += (n_missing++ ? ", " : "") + img.id;
    if (n_missing) throw StructuralError("missing auxiliary features for images: " + missing);
  }

  FeatureMatrix fm;
  Matrix raw(0, emb.dim());
  for (const auto& img : ds.images) {
    const auto& v = emb.rows.at(img.id);
    if (v.size() != emb.dim()) throw StructuralError("embedding dimension mismatch for '" + img.id + "'");
    raw.append_row(v);
    fm.image_ids.push_back(img.id);
  }

  const PcaModel pca = pca_fit(raw, retain);
  const Matrix reduced = pca_transform(pca, raw);
  fm.pca_explained_variance_ratio = pca.explained_variance_ratio;
  fm.warnings = pca.warnings;

  std::vector<std::vector<double>> cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < reduced.cols(); ++c) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = reduced(i, c);
    cols.push_back(std::move(col));
    names.push_back("pc" + std::to_string(c));
  }
  {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i)
      col[i] = static_cast<double>(ds.images[i].annotations.size());
    cols.push_back(std::move(col));
    names.push_back("annotation_count");
  }
  if (aux) {
    for (std::size_t c = 0; c < aux->dim(); ++c) {
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = aux->rows.at(ds.images[i].id).at(c);
      cols.push_back(std::move(col));
      names.push_back(aux->column_names[c]);
    }
  }

  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    double mean = 0.0;
    for (double v : cols[c]) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : cols[c]) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    // Relative cutoff: PCA output on constant data is rounding noise.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      fm.warnings.push_back("dropped constant column '" + names[c] + "'");
      continue;
    }
    for (double& v : cols[c]) v = (v - mean) / sd;
    fm.normalization.emplace_back(mean, sd);
    fm.column_names.push_back(names[c]);
    kept.push_back(c);
  }
  fm.rows = Matrix(n, kept.size());
  for (std::size_t j = 0; j < kept.size(); ++j)
    for (std::size_t i = 0; i < n; ++i) fm.rows(i, j) = cols[kept[j]][i];
  return fm;
}

struct ImageClustering {
  int k = 0;
  std::map<std::string, int> assignments;  ///< image id -> cluster
  double silhouette = 0.0;
  std::map<int, double> per_k_scores;

  /// Image ids of every cluster, each list in id order.
  std::vector<std::vector<std::string>> members() const {
    std::vector<std::vector<std::string>> out(static_cast<std::size_t>(k));
    for (const auto& [id, c] : assignments) out.at(static_cast<std::size_t>(c)).push_back(id);
    return out;
  }
};

inline ImageClustering cluster_images(const FeatureMatrix& fm, int k_min = 2, int k_max = 12,
                                      std::uint64_t seed = 0) {
  if (fm.image_ids.size() < 3) throw DomainError("image clustering needs at least 3 images");
  if (fm.rows.cols() == 0) throw DomainError("feature matrix has no usable columns");
  KMeansOptions km;
  km.seed = seed;
  SilhouetteOptions sil;
  sil.seed = seed;
  const KSelection sel = choose_k(fm.rows, k_min, k_max, km, sil);
  ImageClustering ic;
  ic.k = sel.best_k;
  ic.silhouette = sel.scores.at(sel.best_k);
  ic.per_k_scores = sel.scores;
  for (std::size_t i = 0; i < fm.image_ids.size(); ++i)
    ic.assignments[fm.image_ids[i]] = sel.model.assignments[i];
  return ic;
}

enum class SamplingMode { Balanced, Biased, AnnotationBudget };

inline const char* to_string(SamplingMode m) {
  switch (m) {
    case SamplingMode::Balanced: return "balanced";
    case SamplingMode::Biased: return "biased";
    case SamplingMode::AnnotationBudget: return "annotation_budget";
  }
  return "?";
}

struct SamplingPlan {
  std::vector<std::string> selected;  ///< draw order
  std::map<int, std::size_t> per_cluster;
  std::uint64_t seed = 0;
  SamplingMode mode = SamplingMode::Balanced;

  friend bool operator==(const SamplingPlan&, const SamplingPlan&) = default;
};

/// Up to `per_cluster_target` images from every cluster, uniformly without replacement.
inline SamplingPlan balanced_sample(const ImageClustering& ic, std::size_t per_cluster_target,
                                    std::uint64_t seed) {
  if (per_cluster_target < 1) throw DomainError("per-cluster target must be >= 1");
  SamplingPlan plan;
  plan.seed = seed;
  plan.mode = SamplingMode::Balanced;
  Rng rng(seed);
  auto members = ic.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& ids = members[c];
    rng.shuffle(ids);
    const std::size_t take = std::min(per_cluster_target, ids.size());
    plan.selected.insert(plan.selected.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take));
    plan.per_cluster[static_cast<int>(c)] = take;
  }
  return plan;
}

/// Uniform draw of up to `total_target` images from the given clusters only.
inline SamplingPlan biased_sample(const ImageClustering& ic, const std::vector<int>& clusters,
                                  std::size_t total_target, std::uint64_t seed) {
  if (clusters.empty()) throw DomainError("biased sampling needs a non-empty cluster subset");
  if (total_target < 1) throw DomainError("total target must be >= 1");
  const std::set<int> subset(clusters.begin(), clusters.end());
  for (int c : subset)
    if (c < 0 || c >= ic.k) throw DomainError("unknown cluster index " + std::to_string(c));

  std::vector<std::pair<std::string, int>> pool;
  for (const auto& [id, c] : ic.assignments)
    if (subset.contains(c)) pool.emplace_back(id, c);
  Rng rng(seed);
  rng.shuffle(pool);

  SamplingPlan plan;
  plan.seed = seed;
  plan.mode = SamplingMode::Biased;
  for (int c : subset) plan.per_cluster[c] = 0;
  const std::size_t take = std::min(total_target, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    plan.selected.push_back(pool[i].first);
    ++plan.per_cluster[pool[i].second];
  }
  return plan;
}

/// Round-robin over clusters, one random unused image per cluster per round,
/// until the selected images hold at least `annotation_target` annotations.
inline SamplingPlan annotation_budget_sample(const ImageClustering& ic, const Dataset& ds,
                                             std::size_t annotation_target, std::uint64_t seed) {
  if (annotation_target < 1) throw DomainError("annotation target must be >= 1");
  if (ds.annotation_count() == 0) throw DomainError("dataset has no annotations");
  std::map<std::string, std::size_t> counts;
  for (const auto& img : ds.images) counts[img.id] = img.annotations.size();

  Rng rng(seed);
  auto queues = ic.members();
  for (auto& q : queues) rng.shuffle(q);

  SamplingPlan plan;
  plan.seed = seed;
  plan.mode = SamplingMode::AnnotationBudget;
  for (std::size_t c = 0; c < queues.size(); ++c) plan.per_cluster[static_cast<int>(c)] = 0;
  std::vector<std::size_t> next(queues.size(), 0);
  std::size_t gathered = 0;
  bool progress = true;
  while (progress && gathered < annotation_target) {
    progress = false;
    for (std::size_t c = 0; c < queues.size() && gathered < annotation_target; ++c) {
      if (next[c] >= queues[c].size()) continue;
      const std::string& id = queues[c][next[c]++];
      const auto it = counts.find(id);
      if (it == counts.end()) throw StructuralError("clustered image '" + id + "' not in dataset");
      gathered += it->second;
      plan.selected.push_back(id);
      ++plan.per_cluster[static_cast<int>(c)];
      progress = true;
    }
  }
  return plan;
}

}  // namespace detcfg
