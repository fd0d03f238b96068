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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "detcfg/anchors.hpp"
#include "detcfg/config.hpp"
#include "detcfg/csv.hpp"
#include "detcfg/dataset.hpp"
#include "detcfg/error.hpp"
#include "detcfg/eval.hpp"
#include "detcfg/featuremap.hpp"
#include "detcfg/matching.hpp"
#include "detcfg/sampling.hpp"

namespace detcfg {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct SamplingResult {
  std::vector<std::string> feature_columns;
  std::vector<double> pca_explained_variance_ratio;
  ImageClustering clustering;
  SamplingPlan plan;
};

struct RunReport {
  std::string command;
  Config config;
  std::optional<DatasetStats> stats;
  std::optional<AnchorSet> anchors;
  std::optional<FitReport> anchor_fit;
  std::optional<ScoreConfig> score_config;
  std::optional<FeatureMapSelection> featuremap;
  std::optional<ComparisonReport> matching;
  std::optional<SamplingResult> sampling;
  std::optional<EvalResult> evaluation;
  std::vector<std::string> stage_order;
  std::vector<std::pair<std::string, double>> timing_seconds;
  std::vector<std::string> warnings;
};

namespace detail {

using ojson = nlohmann::ordered_json;

// JSON has no infinity; unbounded values are written as null.
inline ojson finite_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

inline ojson quantiles_json(const Quantiles& q) {
  if (q.empty()) return ojson::object();
  return ojson{{"min", q.min()}, {"q25", q.q25()}, {"median", q.median()},
               {"q75", q.q75()}, {"max", q.max()}};
}

inline ojson stats_json(const DatasetStats& s) {
  ojson per = ojson::object();
  for (const auto& [name, n] : s.per_category) per[name] = n;
  return ojson{{"images", s.images},
               {"annotations", s.annotations},
               {"per_category", per},
               {"box_width", quantiles_json(s.width)},
               {"box_height", quantiles_json(s.height)}};
}

inline ojson per_k_json(const std::map<int, double>& scores) {
  ojson arr = ojson::array();
  for (const auto& [k, s] : scores) arr.push_back({{"k", k}, {"silhouette", s}});
  return arr;
}

inline ojson anchors_json(const AnchorSet& a) {
  ojson sizes = ojson::array();
  for (const auto& s : a.sizes) sizes.push_back({{"w", s.w}, {"h", s.h}});
  return ojson{{"k", a.k}, {"silhouette", a.silhouette}, {"per_k", per_k_json(a.per_k_scores)},
               {"sizes", sizes}};
}

inline ojson fit_json(const FitReport& f) {
  return ojson{{"annotations", f.annotations},
               {"mean_abs_dw", f.mean_abs_dw},
               {"mean_abs_dh", f.mean_abs_dh},
               {"max_abs_delta", f.max_abs_delta},
               {"mean_squared_delta", f.mean_squared_delta},
               {"assignment_counts", f.assignment_counts}};
}

inline ojson featuremap_json(const FeatureMapSelection& sel, const ScoreConfig& sc) {
  ojson levels = ojson::array();
  for (const auto& ls : sel.scores) {
    ojson freq = ojson::object();
    for (const auto& [k, n] : ls.histogram.freq) freq[std::to_string(k)] = n;
    levels.push_back({{"name", ls.level.name},
                      {"stride", ls.level.stride},
                      {"score", ls.score},
                      {"zero_cells", ls.histogram.zero_cells},
                      {"total_cells", ls.histogram.total_cells},
                      {"freq", freq}});
  }
  return ojson{{"num_anchors", sc.num_anchors},
               {"penalty_factor", sc.penalty_factor},
               {"weighting_factor", sc.weighting_factor},
               {"selected", {{"name", sel.best.name}, {"stride", sel.best.stride}}},
               {"levels", levels}};
}

inline ojson match_stats_json(const MatchStats& s) {
  return ojson{{"total_anchors", s.total_anchors}, {"positives", s.positives},
               {"negatives", s.negatives},         {"ignored", s.ignored},
               {"matched_gts", s.matched_gts},     {"unmatched_gts", s.unmatched_gts},
               {"mean_best_iou", s.mean_best_iou()}};
}

inline ojson matching_json(const ComparisonReport& rep) {
  ojson arr = ojson::array();
  for (const auto& e : rep.entries) {
    arr.push_back({{"level", {{"name", e.level.name}, {"stride", e.level.stride}}},
                   {"anchor_count", e.anchors.sizes.size()},
                   {"stats", match_stats_json(e.stats)},
                   {"negatives_per_positive", e.negatives_per_positive
                                                  ? ojson(*e.negatives_per_positive)
                                                  : ojson(nullptr)},
                   {"coverage", e.coverage}});
  }
  return ojson{{"configurations", arr}};
}

inline ojson sampling_json(const SamplingResult& s) {
  ojson sizes = ojson::array();
  for (const auto& m : s.clustering.members()) sizes.push_back(m.size());
  ojson per = ojson::object();
  for (const auto& [c, n] : s.plan.per_cluster) per[std::to_string(c)] = n;
  return ojson{{"feature_columns", s.feature_columns},
               {"pca_explained_variance_ratio", s.pca_explained_variance_ratio},
               {"clustering",
                {{"k", s.clustering.k},
                 {"silhouette", s.clustering.silhouette},
                 {"per_k", per_k_json(s.clustering.per_k_scores)},
                 {"cluster_sizes", sizes}}},
               {"plan",
                {{"mode", to_string(s.plan.mode)},
                 {"seed", s.plan.seed},
                 {"selected_count", s.plan.selected.size()},
                 {"per_cluster", per},
                 {"selected", s.plan.selected}}}};
}

inline ojson eval_json(const EvalResult& e) {
  ojson ap = ojson::object();
  for (const auto& [cat, v] : e.ap_per_category) ap[std::to_string(cat)] = 100.0 * v;
  return ojson{{"iou_threshold", e.iou_threshold},
               {"best_f1", e.best_f1},
               {"best_threshold", finite_or_null(e.best_threshold)},
               {"precision_at_best", e.precision_at_best},
               {"recall_at_best", e.recall_at_best},
               {"ap_percent_per_category", ap},
               {"map_percent", 100.0 * e.map}};
}

}  // namespace detail

/// Full report. Stages appear in execution order; timing sits in its own
/// trailing block so the rest is byte-stable across identical runs.
inline nlohmann::ordered_json report_to_json(const RunReport& r) {
  using detail::ojson;
  ojson j;
  j["toolkit_version"] = kToolkitVersion;
  j["command"] = r.command;
  j["config"] = config_to_json(r.config);
  j["warnings"] = r.warnings;
  ojson stages = ojson::object();
  for (const auto& name : r.stage_order) {
    if (name == "stats" && r.stats) stages["stats"] = detail::stats_json(*r.stats);
    if (name == "anchors" && r.anchors) {
      ojson a = detail::anchors_json(*r.anchors);
      if (r.anchor_fit) a["fit"] = detail::fit_json(*r.anchor_fit);
      stages["anchors"] = a;
    }
    if (name == "featuremap" && r.featuremap && r.score_config)
      stages["featuremap"] = detail::featuremap_json(*r.featuremap, *r.score_config);
    if (name == "match" && r.matching) stages["match"] = detail::matching_json(*r.matching);
    if (name == "sample" && r.sampling) stages["sample"] = detail::sampling_json(*r.sampling);
    if (name == "eval" && r.evaluation) stages["eval"] = detail::eval_json(*r.evaluation);
  }
  j["stages"] = stages;
  ojson timing = ojson::object();
  for (const auto& [stage, secs] : r.timing_seconds) timing[stage] = secs;
  j["timing"] = timing;
  return j;
}

/// Writes via a temporary sibling and rename so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::string anchors_csv(const AnchorSet& a) {
  std::string s = "w,h\n";
  for (const auto& sz : a.sizes) s += csv::format_double(sz.w) + "," + csv::format_double(sz.h) + "\n";
  return s;
}

/// Reads the `w,h` anchors file written by emit_report.
inline AnchorSet parse_anchors_csv(std::string_view text) {
  const csv::Table t = csv::read_table(text);
  if (t.header != csv::Row{"w", "h"}) throw ParseError("anchors header must be 'w,h'", 1, "row");
  std::vector<AnchorSize> sizes;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != 2) throw ParseError("expected 2 fields", t.row_numbers[r], "row");
    sizes.push_back({csv::parse_double(t.rows[r][0], t.row_numbers[r], "w"),
                     csv::parse_double(t.rows[r][1], t.row_numbers[r], "h")});
  }
  try {
    return make_anchor_set(std::move(sizes));
  } catch (const DomainError& e) {
    throw StructuralError(std::string("anchors file: ") + e.what());
  }
}

/// Writes report.json, config.txt and whichever per-stage artifacts exist.
/// Returns the written paths.
inline std::vector<std::filesystem::path> emit_report(const RunReport& r,
                                                      const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  std::vector<std::filesystem::path> written;
  auto put = [&](const char* name, const std::string& content) {
    const auto p = out_dir / name;
    write_file_atomic(p, content);
    written.push_back(p);
  };

  put("report.json", report_to_json(r).dump(2) + "\n");
  put("config.txt", config_to_text(r.config));

  if (r.anchors) {
    put("anchors.csv", anchors_csv(*r.anchors));
    if (!r.anchors->per_k_scores.empty()) {
      std::string s = "k,silhouette\n";
      for (const auto& [k, v] : r.anchors->per_k_scores)
        s += std::to_string(k) + "," + csv::format_double(v) + "\n";
      put("plotdata_silhouette.csv", s);
    }
  }
  if (r.featuremap) {
    std::string s = "level,stride,score\n";
    for (const auto& ls : r.featuremap->scores)
      s += csv::quote(ls.level.name) + "," + std::to_string(ls.level.stride) + "," +
           csv::format_double(ls.score) + "\n";
    put("plotdata_scores.csv", s);
  }
  if (r.sampling) {
    const auto& smp = *r.sampling;
    std::string plan;
    for (const auto& id : smp.plan.selected) plan += id + "\n";
    put("sampling_plan.txt", plan);
    put("sampling_summary.json", detail::sampling_json(smp).dump(2) + "\n");

    std::string sil = "k,silhouette\n";
    for (const auto& [k, v] : smp.clustering.per_k_scores)
      sil += std::to_string(k) + "," + csv::format_double(v) + "\n";
    put("plotdata_image_silhouette.csv", sil);

    std::string dist = "cluster,size,selected\n";
    const auto members = smp.clustering.members();
    for (std::size_t c = 0; c < members.size(); ++c) {
      const auto it = smp.plan.per_cluster.find(static_cast<int>(c));
      dist += std::to_string(c) + "," + std::to_string(members[c].size()) + "," +
              std::to_string(it == smp.plan.per_cluster.end() ? 0 : it->second) + "\n";
    }
    put("plotdata_clusters.csv", dist);
  }
  return written;
}

}  // namespace detcfg
