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
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "detcfg/config.hpp"
#include "detcfg/error.hpp"
#include "detcfg/pipeline.hpp"
#include "detcfg/report.hpp"

namespace detcfg {

inline constexpr const char* kSeedEnvVar = "DETCFG_SEED";

namespace detail {

enum StageMask : unsigned {
  kStats = 1u << 0,
  kFeatureMap = 1u << 1,
  kAnchors = 1u << 2,
  kSample = 1u << 3,
  kMatch = 1u << 4,
  kEval = 1u << 5,
  kPipeline = 1u << 6,
  kAll = 0x7f,
};

struct FlagSpec {
  const char* flag;
  const char* key;  ///< config key the flag overrides
  const char* help;
  unsigned used_by;
  bool is_switch = false;
};

// Every flag maps onto a config key so flags, config files and the config
// echo share one parser.
inline const std::vector<FlagSpec>& flag_specs() {
  static const std::vector<FlagSpec> specs = {
      {"--annotations", "annotations", "annotation file (.json COCO-style or .csv)", kAll},
      {"--seed", "seed", "RNG seed (default from $DETCFG_SEED)", kAll},
      {"--levels", "levels", "candidate levels, e.g. P3:8,P4:16,P5:32",
       kFeatureMap | kMatch | kPipeline},
      {"--num-anchors", "num_anchors", "anchors per grid cell for level scoring",
       kFeatureMap | kPipeline},
      {"--penalty", "penalty_factor", "empty-cell penalty factor", kFeatureMap | kPipeline},
      {"--weighting", "weighting_factor", "overfull-cell weighting factor",
       kFeatureMap | kPipeline},
      {"--k-min", "anchor_k_min", "smallest anchor count tried",
       kAnchors | kFeatureMap | kMatch | kPipeline},
      {"--k-max", "anchor_k_max", "largest anchor count tried",
       kAnchors | kFeatureMap | kMatch | kPipeline},
      {"--allow-single", "allow_single_anchor", "fall back to one mean anchor on degenerate data",
       kAnchors | kFeatureMap | kMatch | kPipeline, true},
      {"--log-base", "log_base", "regression delta log base: natural or 2", kAnchors | kPipeline},
      {"--anchors", "anchors", "precomputed anchors CSV (w,h)", kMatch},
      {"--positive-iou", "positive_iou", "IoU at or above which an anchor is positive",
       kMatch | kPipeline},
      {"--negative-iou", "negative_iou", "IoU below which an anchor is negative",
       kMatch | kPipeline},
      {"--force-match", "force_match", "give every ground truth its best anchor",
       kMatch | kPipeline, true},
      {"--clip", "clip_anchors", "clip anchors to image bounds", kMatch | kPipeline, true},
      {"--embeddings", "embeddings", "per-image embeddings CSV (image_id,f0,...)",
       kSample | kPipeline},
      {"--aux", "aux_features", "auxiliary per-image features CSV", kSample | kPipeline},
      {"--sample-k-min", "sample_k_min", "smallest image-cluster count tried", kSample | kPipeline},
      {"--sample-k-max", "sample_k_max", "largest image-cluster count tried", kSample | kPipeline},
      {"--pca-variance", "pca_variance", "PCA variance fraction to keep", kSample | kPipeline},
      {"--pca-components", "pca_components", "PCA component count (overrides variance)",
       kSample | kPipeline},
      {"--mode", "sampling_mode", "balanced | biased | annotation_budget", kSample | kPipeline},
      {"--per-cluster", "per_cluster_target", "images drawn per cluster (balanced)",
       kSample | kPipeline},
      {"--clusters", "biased_clusters", "cluster subset for biased sampling, e.g. 0,2",
       kSample | kPipeline},
      {"--total", "total_target", "images drawn in biased mode", kSample | kPipeline},
      {"--annotation-target", "annotation_target", "annotation budget (annotation_budget mode)",
       kSample | kPipeline},
      {"--detections", "detections", "detections CSV", kEval | kPipeline},
      {"--iou", "eval_iou", "IoU threshold for evaluation", kEval | kPipeline},
  };
  return specs;
}

struct Subcommand {
  const char* name;
  unsigned mask;
  const char* help;
};

inline const std::vector<Subcommand>& subcommands() {
  static const std::vector<Subcommand> subs = {
      {"stats", kStats, "summarize an annotation dataset"},
      {"featuremap", kFeatureMap, "score candidate pyramid levels and pick the best"},
      {"anchors", kAnchors, "estimate anchor sizes by silhouette-guided k-means"},
      {"sample", kSample, "cluster images and draw a training subset"},
      {"match", kMatch, "simulate anchor assignment per candidate level"},
      {"eval", kEval, "best F1 and mAP of detections against the annotations"},
      {"pipeline", kPipeline, "anchors -> featuremap -> match -> sample (-> eval)"},
  };
  return subs;
}

inline void print_summary(const RunReport& r, std::ostream& out) {
  if (r.stats) out << "images: " << r.stats->images << "  annotations: " << r.stats->annotations << '\n';
  if (r.anchors) {
    out << "anchors (k=" << r.anchors->k << "):";
    for (const auto& s : r.anchors->sizes) out << ' ' << s.w << 'x' << s.h;
    out << '\n';
  }
  if (r.featuremap) {
    for (const auto& ls : r.featuremap->scores)
      out << "  " << ls.level.name << " (stride " << ls.level.stride << "): " << ls.score << '\n';
    out << "selected level: " << r.featuremap->best.name << '\n';
  }
  if (r.matching)
    for (const auto& e : r.matching->entries)
      out << "  " << e.level.name << ": anchors " << e.stats.total_anchors << ", positives "
          << e.stats.positives << ", coverage " << e.coverage << '\n';
  if (r.sampling)
    out << "image clusters: " << r.sampling->clustering.k << ", selected "
        << r.sampling->plan.selected.size() << " images\n";
  if (r.evaluation)
    out << "best F1: " << r.evaluation->best_f1 << "  mAP: " << 100.0 * r.evaluation->map << '\n';
}

}  // namespace detail

/// Command-line entry point. Exit codes: 0 success, 1 input error (bad
/// flags, files, config), 2 internal invariant failure.
inline int run_cli(const std::vector<std::string>& argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Data-driven detector configuration toolkit", "detcfg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);

  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
  std::string config_path;
  std::string out_dir = "detcfg_out";
  std::map<std::string, std::vector<CLI::Option*>> bound;

  for (const auto& sub : detail::subcommands()) {
    CLI::App* s = app.add_subcommand(sub.name, sub.help);
    s->add_option("--config", config_path, "key = value config file");
    s->add_option("--out", out_dir, "output directory")->capture_default_str();
    for (const auto& f : detail::flag_specs()) {
      if (!(f.used_by & sub.mask)) continue;
      CLI::Option* o = f.is_switch ? s->add_flag(f.flag, switches[f.key], f.help)
                                   : s->add_option(f.flag, values[f.key], f.help);
      bound[f.key].push_back(o);
    }
  }

  try {
    std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);  // --help / --version
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  std::string command;
  for (const auto* s : app.get_subcommands()) command = s->get_name();

  try {
    Config cfg = config_path.empty() ? Config{} : load_config(config_path);
    if (!cfg.seed) {
      if (const char* env = std::getenv(kSeedEnvVar); env && *env) set_config_value(cfg, "seed", env);
    }
    for (const auto& [key, opts] : bound) {
      for (const CLI::Option* o : opts) {
        if (o->count() == 0) continue;
        if (switches.contains(key)) set_config_value(cfg, key, switches[key] ? "true" : "false");
        else set_config_value(cfg, key, values[key]);
      }
    }
    validate_config(cfg);

    const RunReport report = run_command(command, cfg);
    emit_report(report, out_dir);
    detail::print_summary(report, out);
    out << "report: " << (std::filesystem::path(out_dir) / "report.json").string() << '\n';
    return 0;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace detcfg
