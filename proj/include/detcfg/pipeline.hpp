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

#include <chrono>
#include <string>
#include <string_view>

#include "detcfg/anchors.hpp"
#include "detcfg/config.hpp"
#include "detcfg/csv.hpp"
#include "detcfg/dataset_io.hpp"
#include "detcfg/error.hpp"
#include "detcfg/eval.hpp"
#include "detcfg/featuremap.hpp"
#include "detcfg/matching.hpp"
#include "detcfg/report.hpp"
#include "detcfg/sampling.hpp"

namespace detcfg {

/// Executes configured stages against one dataset and fills a RunReport.
class Pipeline {
 public:
  Pipeline(Config cfg, Dataset ds) : ds_(std::move(ds)) {
    validate_config(cfg);
    report_.config = std::move(cfg);
  }

  const Dataset& dataset() const noexcept { return ds_; }
  const RunReport& report() const noexcept { return report_; }
  RunReport take_report() { return std::move(report_); }

  void stats() {
    timed("stats", [&] { report_.stats = dataset_stats(ds_); });
  }

  void anchors() {
    const Config& cfg = report_.config;
    const std::uint64_t seed = require_seed("anchors");
    timed("anchors", [&] {
      AnchorEstimateOptions opt;
      opt.k_min = cfg.anchor_k_min;
      opt.k_max = cfg.anchor_k_max;
      opt.seed = seed;
      opt.allow_single = cfg.allow_single_anchor;
      report_.anchors = estimate_anchors(ds_, opt);
      report_.anchor_fit = anchor_fit_report(ds_, *report_.anchors, cfg.log_base);
    });
  }

  /// Uses the anchor stage's k when it ran (the two are coupled), otherwise
  /// the configured num_anchors.
  void featuremap() {
    const Config& cfg = report_.config;
    int num_anchors = 0;
    if (report_.anchors) {
      num_anchors = report_.anchors->k;
      if (cfg.num_anchors && *cfg.num_anchors != num_anchors)
        report_.warnings.push_back("num_anchors from config ignored; using anchor stage k=" +
                                   std::to_string(num_anchors));
    } else if (cfg.num_anchors) {
      num_anchors = *cfg.num_anchors;
    } else {
      throw ConfigError("featuremap needs num_anchors (or an anchor stage to supply it)");
    }
    timed("featuremap", [&] {
      report_.score_config = cfg.score_config(num_anchors);
      report_.featuremap = find_optimal_feature_map_size(ds_, cfg.levels, *report_.score_config);
    });
  }

  /// Anchor source: this run's anchor stage, else the configured anchors
  /// file, else a fresh estimate.
  void match() {
    const Config& cfg = report_.config;
    if (!report_.anchors) {
      if (!cfg.anchors.empty()) {
        report_.anchors = parse_anchors_csv(csv::read_file(cfg.anchors));
      } else {
        anchors();
      }
    }
    timed("match", [&] {
      std::vector<std::pair<PyramidLevel, AnchorSet>> configs;
      for (const auto& level : cfg.levels) configs.emplace_back(level, *report_.anchors);
      report_.matching = compare_configurations(ds_, configs, cfg.match_config());
    });
  }

  void sample() {
    const Config& cfg = report_.config;
    const std::uint64_t seed = require_seed("sample");
    timed("sample", [&] {
      const EmbeddingTable emb = cfg.embeddings.empty()
                                     ? fallback_descriptors(ds_)
                                     : load_embeddings(csv::read_file(cfg.embeddings));
      std::optional<FeatureTable> aux;
      if (!cfg.aux_features.empty()) aux = load_aux_features(csv::read_file(cfg.aux_features));
      const FeatureMatrix fm = assemble_features(ds_, emb, aux ? &*aux : nullptr, cfg.pca_retain);
      for (const auto& w : fm.warnings) report_.warnings.push_back("sample: " + w);

      SamplingResult res;
      res.feature_columns = fm.column_names;
      res.pca_explained_variance_ratio = fm.pca_explained_variance_ratio;
      res.clustering = cluster_images(fm, cfg.sample_k_min, cfg.sample_k_max, seed);
      switch (cfg.sampling_mode) {
        case SamplingMode::Balanced:
          res.plan = balanced_sample(res.clustering, cfg.per_cluster_target, seed);
          break;
        case SamplingMode::Biased:
          if (cfg.biased_clusters.empty())
            throw ConfigError("biased sampling needs biased_clusters");
          res.plan = biased_sample(res.clustering, cfg.biased_clusters, cfg.total_target, seed);
          break;
        case SamplingMode::AnnotationBudget:
          res.plan = annotation_budget_sample(res.clustering, ds_, cfg.annotation_target, seed);
          break;
      }
      report_.sampling = std::move(res);
    });
  }

  void eval() {
    const Config& cfg = report_.config;
    if (cfg.detections.empty()) throw ConfigError("eval needs a detections file");
    timed("eval", [&] {
      const auto preds = parse_detections(csv::read_file(cfg.detections), ds_);
      const auto gts = ground_truths(ds_);
      report_.evaluation = evaluate(preds, gts, cfg.eval_iou);
      for (const auto& w : report_.evaluation->warnings) report_.warnings.push_back("eval: " + w);
    });
  }

 private:
  std::uint64_t require_seed(const char* stage) const {
    if (!report_.config.seed)
      throw ConfigError(std::string(stage) + " is stochastic and needs a seed");
    return *report_.config.seed;
  }

  template <class F>
  void timed(const char* stage, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    report_.stage_order.emplace_back(stage);
    report_.timing_seconds.emplace_back(stage, dt.count());
  }

  Dataset ds_;
  RunReport report_;
};

inline constexpr std::string_view kCommands[] = {"stats", "featuremap", "anchors", "sample",
                                                 "match", "eval",       "pipeline"};

/// Runs one subcommand end to end. `pipeline` runs stats, anchors,
/// featuremap (wired to the anchor k), match, sample, and eval when
/// detections are configured.
inline RunReport run_command(std::string_view command, const Config& cfg) {
  if (cfg.annotations.empty()) throw ConfigError("an annotations file is required");
  Pipeline p(cfg, load_dataset(cfg.annotations));
  if (command == "stats") {
    p.stats();
  } else if (command == "featuremap") {
    if (!cfg.num_anchors) p.anchors();
    p.featuremap();
  } else if (command == "anchors") {
    p.anchors();
  } else if (command == "sample") {
    p.sample();
  } else if (command == "match") {
    p.match();
  } else if (command == "eval") {
    p.eval();
  } else if (command == "pipeline") {
    p.stats();
    p.anchors();
    p.featuremap();
    p.match();
    p.sample();
    if (!cfg.detections.empty()) p.eval();
  } else {
    throw ConfigError("unknown command '" + std::string(command) + "'");
  }
  RunReport r = p.take_report();
  r.command = std::string(command);
  return r;
}

}  // namespace detcfg
