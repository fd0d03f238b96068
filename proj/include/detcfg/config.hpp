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

// Run configuration and its `key = value` text form.
//
//   # comment
//   annotations = train.json
//   levels = P3:8, P4:16, P5:32
//   seed = 7
//
// Unknown keys are rejected. An empty value resets a key to its default.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "detcfg/anchors.hpp"
#include "detcfg/csv.hpp"
#include "detcfg/error.hpp"
#include "detcfg/featuremap.hpp"
#include "detcfg/matching.hpp"
#include "detcfg/pca.hpp"
#include "detcfg/sampling.hpp"

namespace detcfg {

struct Config {
  std::string annotations;
  std::string embeddings;
  std::string aux_features;
  std::string detections;
  std::string anchors;  ///< optional precomputed anchors CSV (w,h)

  std::vector<PyramidLevel> levels = default_pyramid_levels();
  double penalty_factor = 0.0001;
  double weighting_factor = -1.0;
  std::optional<int> num_anchors;

  int anchor_k_min = 2;
  int anchor_k_max = 6;
  bool allow_single_anchor = false;
  LogBase log_base = LogBase::Natural;

  int sample_k_min = 2;
  int sample_k_max = 12;
  PcaRetain pca_retain = PcaRetain::variance(0.95);
  SamplingMode sampling_mode = SamplingMode::Balanced;
  std::size_t per_cluster_target = 10;
  std::vector<int> biased_clusters;
  std::size_t total_target = 100;
  std::size_t annotation_target = 1000;

  double positive_iou = 0.5;
  double negative_iou = 0.4;
  bool force_match = false;
  bool clip_anchors = false;

  double eval_iou = 0.3;

  std::optional<std::uint64_t> seed;

  ScoreConfig score_config(int anchors_per_cell) const {
    return {penalty_factor, weighting_factor, anchors_per_cell};
  }
  MatchConfig match_config() const {
    return {positive_iou, negative_iou, force_match, clip_anchors};
  }

  friend bool operator==(const Config&, const Config&) = default;
};

namespace detail {

template <class T>
T parse_integer(std::string_view key, std::string_view v) {
  v = csv::trim(v);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("invalid integer '" + std::string(v) + "' for '" + std::string(key) + "'");
  return out;
}

inline double parse_real(std::string_view key, std::string_view v) {
  if (auto d = csv::to_double(v)) return *d;
  throw ConfigError("invalid number '" + std::string(v) + "' for '" + std::string(key) + "'");
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  v = csv::trim(v);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("invalid boolean '" + std::string(v) + "' for '" + std::string(key) + "'");
}

inline std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    std::size_t end = v.find(',', pos);
    if (end == std::string_view::npos) end = v.size();
    const auto item = csv::trim(v.substr(pos, end - pos));
    if (!item.empty()) out.emplace_back(item);
    pos = end + 1;
  }
  return out;
}

/// "P3:8" or a bare stride "8" (named "s8").
inline std::vector<PyramidLevel> parse_levels(std::string_view v) {
  std::vector<PyramidLevel> out;
  for (const auto& item : split_list(v)) {
    const auto colon = item.find(':');
    PyramidLevel l;
    if (colon == std::string::npos) {
      l.stride = parse_integer<std::int64_t>("levels", item);
      l.name = "s" + item;
    } else {
      l.name = std::string(csv::trim(std::string_view(item).substr(0, colon)));
      l.stride = parse_integer<std::int64_t>("levels", std::string_view(item).substr(colon + 1));
    }
    out.push_back(std::move(l));
  }
  return out;
}

inline std::string levels_text(const std::vector<PyramidLevel>& levels) {
  std::string s;
  for (std::size_t i = 0; i < levels.size(); ++i)
    s += (i ? "," : "") + levels[i].name + ":" + std::to_string(levels[i].stride);
  return s;
}

}  // namespace detail

inline SamplingMode parse_sampling_mode(std::string_view v) {
  v = csv::trim(v);
  if (v == "balanced") return SamplingMode::Balanced;
  if (v == "biased") return SamplingMode::Biased;
  if (v == "annotation_budget" || v == "budget") return SamplingMode::AnnotationBudget;
  throw ConfigError("unknown sampling mode '" + std::string(v) + "'");
}

/// Sets one key. Throws ConfigError naming the key when it is unknown or the
/// value does not parse.
inline void set_config_value(Config& cfg, std::string_view key, std::string_view value) {
  using namespace detail;
  value = csv::trim(value);
  const Config defaults;
  const bool reset = value.empty();
  auto path = [&](std::string& field) { field = std::string(value); };

  if (key == "annotations") path(cfg.annotations);
  else if (key == "embeddings") path(cfg.embeddings);
  else if (key == "aux_features") path(cfg.aux_features);
  else if (key == "detections") path(cfg.detections);
  else if (key == "anchors") path(cfg.anchors);
  else if (key == "levels") cfg.levels = reset ? defaults.levels : parse_levels(value);
  else if (key == "penalty_factor") cfg.penalty_factor = reset ? defaults.penalty_factor : parse_real(key, value);
  else if (key == "weighting_factor") cfg.weighting_factor = reset ? defaults.weighting_factor : parse_real(key, value);
  else if (key == "num_anchors") cfg.num_anchors = reset ? std::nullopt : std::optional<int>(parse_integer<int>(key, value));
  else if (key == "anchor_k_min") cfg.anchor_k_min = reset ? defaults.anchor_k_min : parse_integer<int>(key, value);
  else if (key == "anchor_k_max") cfg.anchor_k_max = reset ? defaults.anchor_k_max : parse_integer<int>(key, value);
  else if (key == "allow_single_anchor") cfg.allow_single_anchor = reset ? false : parse_bool(key, value);
  else if (key == "log_base") {
    if (reset || value == "natural" || value == "e") cfg.log_base = LogBase::Natural;
    else if (value == "2") cfg.log_base = LogBase::Two;
    else throw ConfigError("log_base must be 'natural' or '2'");
  }
  else if (key == "sample_k_min") cfg.sample_k_min = reset ? defaults.sample_k_min : parse_integer<int>(key, value);
  else if (key == "sample_k_max") cfg.sample_k_max = reset ? defaults.sample_k_max : parse_integer<int>(key, value);
  else if (key == "pca_variance") cfg.pca_retain = reset ? defaults.pca_retain : PcaRetain::variance(parse_real(key, value));
  else if (key == "pca_components") {
    if (reset) {
      cfg.pca_retain = defaults.pca_retain;
    } else {
      const auto n = parse_integer<std::size_t>(key, value);
      if (n == 0) throw ConfigError("pca_components must be >= 1");
      cfg.pca_retain = PcaRetain::count(n);
    }
  }
  else if (key == "sampling_mode") cfg.sampling_mode = reset ? defaults.sampling_mode : parse_sampling_mode(value);
  else if (key == "per_cluster_target") cfg.per_cluster_target = reset ? defaults.per_cluster_target : parse_integer<std::size_t>(key, value);
  else if (key == "biased_clusters") {
    cfg.biased_clusters.clear();
    for (const auto& item : split_list(value)) cfg.biased_clusters.push_back(parse_integer<int>(key, item));
  }
  else if (key == "total_target") cfg.total_target = reset ? defaults.total_target : parse_integer<std::size_t>(key, value);
  else if (key == "annotation_target") cfg.annotation_target = reset ? defaults.annotation_target : parse_integer<std::size_t>(key, value);
  else if (key == "positive_iou") cfg.positive_iou = reset ? defaults.positive_iou : parse_real(key, value);
  else if (key == "negative_iou") cfg.negative_iou = reset ? defaults.negative_iou : parse_real(key, value);
  else if (key == "force_match") cfg.force_match = reset ? false : parse_bool(key, value);
  else if (key == "clip_anchors") cfg.clip_anchors = reset ? false : parse_bool(key, value);
  else if (key == "eval_iou") cfg.eval_iou = reset ? defaults.eval_iou : parse_real(key, value);
  else if (key == "seed") cfg.seed = reset ? std::nullopt : std::optional<std::uint64_t>(parse_integer<std::uint64_t>(key, value));
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

/// Checks cross-field constraints after all keys are set.
inline void validate_config(const Config& cfg) {
  if (cfg.levels.empty()) throw ConfigError("at least one pyramid level is required");
  try {
    validate_levels(cfg.levels);
    validate_match_config(cfg.match_config());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (cfg.num_anchors && *cfg.num_anchors < 1) throw ConfigError("num_anchors must be >= 1");
  if (cfg.anchor_k_min < 2 || cfg.anchor_k_max < cfg.anchor_k_min)
    throw ConfigError("anchor k range must satisfy 2 <= anchor_k_min <= anchor_k_max");
  if (cfg.sample_k_min < 2 || cfg.sample_k_max < cfg.sample_k_min)
    throw ConfigError("sampling k range must satisfy 2 <= sample_k_min <= sample_k_max");
  if (cfg.pca_retain.mode == PcaRetain::Mode::VarianceFraction &&
      !(cfg.pca_retain.value > 0.0 && cfg.pca_retain.value <= 1.0))
    throw ConfigError("pca_variance must be in (0, 1]");
  if (cfg.per_cluster_target < 1) throw ConfigError("per_cluster_target must be >= 1");
  if (cfg.total_target < 1) throw ConfigError("total_target must be >= 1");
  if (cfg.annotation_target < 1) throw ConfigError("annotation_target must be >= 1");
  if (!(cfg.eval_iou >= 0.0 && cfg.eval_iou <= 1.0)) throw ConfigError("eval_iou must be in [0, 1]");
}

/// Parses config text. Relative paths are resolved against `base_dir` when given.
inline Config parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  Config cfg;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = csv::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    set_config_value(cfg, csv::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  if (!base_dir.empty()) {
    for (std::string* p : {&cfg.annotations, &cfg.embeddings, &cfg.aux_features, &cfg.detections,
                           &cfg.anchors})
      if (!p->empty() && std::filesystem::path(*p).is_relative())
        *p = (base_dir / *p).lexically_normal().string();
  }
  validate_config(cfg);
  return cfg;
}

inline Config load_config(const std::string& path) {
  const std::string text = csv::read_file(path);
  return parse_config(text, std::filesystem::path(path).parent_path());
}

/// Text form accepted by parse_config; every key is written.
inline std::string config_to_text(const Config& cfg) {
  std::ostringstream os;
  auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto real = [](double v) { return csv::format_double(v); };
  kv("annotations", cfg.annotations);
  kv("embeddings", cfg.embeddings);
  kv("aux_features", cfg.aux_features);
  kv("detections", cfg.detections);
  kv("anchors", cfg.anchors);
  kv("levels", detail::levels_text(cfg.levels));
  kv("penalty_factor", real(cfg.penalty_factor));
  kv("weighting_factor", real(cfg.weighting_factor));
  kv("num_anchors", cfg.num_anchors ? std::to_string(*cfg.num_anchors) : "");
  kv("anchor_k_min", std::to_string(cfg.anchor_k_min));
  kv("anchor_k_max", std::to_string(cfg.anchor_k_max));
  kv("allow_single_anchor", cfg.allow_single_anchor ? "true" : "false");
  kv("log_base", cfg.log_base == LogBase::Natural ? "natural" : "2");
  kv("sample_k_min", std::to_string(cfg.sample_k_min));
  kv("sample_k_max", std::to_string(cfg.sample_k_max));
  if (cfg.pca_retain.mode == PcaRetain::Mode::Count)
    kv("pca_components", std::to_string(static_cast<std::size_t>(cfg.pca_retain.value)));
  else
    kv("pca_variance", real(cfg.pca_retain.value));
  kv("sampling_mode", to_string(cfg.sampling_mode));
  kv("per_cluster_target", std::to_string(cfg.per_cluster_target));
  std::string clusters;
  for (std::size_t i = 0; i < cfg.biased_clusters.size(); ++i)
    clusters += (i ? "," : "") + std::to_string(cfg.biased_clusters[i]);
  kv("biased_clusters", clusters);
  kv("total_target", std::to_string(cfg.total_target));
  kv("annotation_target", std::to_string(cfg.annotation_target));
  kv("positive_iou", real(cfg.positive_iou));
  kv("negative_iou", real(cfg.negative_iou));
  kv("force_match", cfg.force_match ? "true" : "false");
  kv("clip_anchors", cfg.clip_anchors ? "true" : "false");
  kv("eval_iou", real(cfg.eval_iou));
  kv("seed", cfg.seed ? std::to_string(*cfg.seed) : "");
  return os.str();
}

inline nlohmann::ordered_json config_to_json(const Config& cfg) {
  nlohmann::ordered_json j;
  std::istringstream in(config_to_text(cfg));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    j[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return j;
}

}  // namespace detcfg
