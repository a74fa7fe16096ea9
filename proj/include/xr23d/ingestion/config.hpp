/*
 * xr23d: biplanar X-ray to 3D bone reconstruction benchmark toolkit
 *
 * Copyright 2026 The xr23d Authors
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

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "toml.hpp"
#include "xr23d/core/error.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d::ingestion {

enum class Anatomy { Femur, Hip, Rib, Vertebra };

inline std::string_view to_string(Anatomy a) {
  switch (a) {
    case Anatomy::Femur: return "femur";
    case Anatomy::Hip: return "hip";
    case Anatomy::Rib: return "rib";
    case Anatomy::Vertebra: return "vertebra";
  }
  return "femur";
}

inline Anatomy anatomy_from_string(std::string_view s) {
  if (s == "femur") return Anatomy::Femur;
  if (s == "hip") return Anatomy::Hip;
  if (s == "rib") return Anatomy::Rib;
  if (s == "vertebra") return Anatomy::Vertebra;
  throw ConfigError("unknown anatomy '" + std::string(s) + "'");
}

inline constexpr std::array<Anatomy, 4> kAllAnatomies{Anatomy::Femur, Anatomy::Hip, Anatomy::Rib, Anatomy::Vertebra};

enum class Completeness { None, FullRibSet };

struct CurationRule {
  Anatomy anatomy = Anatomy::Femur;
  std::int64_t min_voxels = 0;
  Completeness completeness = Completeness::None;
  std::set<std::string> manual_reject_list;

  /// Labels whose union forms the structure. Empty means every non-zero label.
  std::vector<std::int64_t> labels;
  /// Rib labels required for a full set. Empty selects the extent heuristic.
  std::vector<std::int64_t> rib_labels;
  /// Minimum superior-inferior extent accepted by the heuristic rib check.
  double heuristic_min_extent_mm = 200.0;
  /// Dataset subsets scanned for this anatomy. Empty means all of them.
  std::vector<std::string> subsets;
};

struct PreparationTarget {
  Dims dims{128, 128, 128};
  double spacing_mm = 1.0;
};

struct AnatomyConfig {
  CurationRule rule;
  PreparationTarget target;
};

inline AnatomyConfig default_anatomy_config(Anatomy a) {
  AnatomyConfig c;
  c.rule.anatomy = a;
  switch (a) {
    case Anatomy::Femur:
      c.rule.min_voxels = 30000;
      c.rule.labels = {1};
      c.target = {{128, 128, 128}, 1.0};
      break;
    case Anatomy::Hip:
      c.rule.min_voxels = 150000;
      c.rule.labels = {1};
      c.target = {{128, 128, 128}, 2.25};
      break;
    case Anatomy::Rib:
      c.rule.completeness = Completeness::FullRibSet;
      for (std::int64_t l = 1; l <= 24; ++l) c.rule.rib_labels.push_back(l);
      c.target = {{128, 128, 128}, 2.5};
      break;
    case Anatomy::Vertebra:
      c.rule.min_voxels = 1;
      c.target = {{64, 64, 64}, 1.5};
      break;
  }
  return c;
}

struct SplitSpec {
  std::uint64_t seed = 0;
  /// Percent of groups kept for training+validation, then percent of that pool for training.
  int train_pool_percent = 85;
  int train_percent = 85;
};

struct IngestConfig {
  std::map<Anatomy, AnatomyConfig> anatomies;
  SplitSpec split;
};

/// Reads one identifier per line; blank lines and lines starting with '#' are skipped.
inline std::set<std::string> read_id_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read reject list: " + path.string());
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    ids.insert(line.substr(b, e - b + 1));
  }
  return ids;
}

namespace detail {

template <typename T>
std::vector<T> int_array(const toml::node_view<const toml::node>& node, std::string_view key) {
  std::vector<T> out;
  const auto* arr = node.as_array();
  if (!arr) throw ConfigError(std::string(key) + " must be an array of integers");
  for (const auto& el : *arr) {
    const auto v = el.template value<std::int64_t>();
    if (!v) throw ConfigError(std::string(key) + " must contain integers only");
    out.push_back(static_cast<T>(*v));
  }
  return out;
}

}  // namespace detail

/// Parses `[anatomy.<name>]` sections and an optional `[split]` table. Only the
/// anatomies that appear get ingested; unspecified keys keep their defaults.
/// Relative reject-list paths resolve against `base_dir`.
inline IngestConfig parse_config(const toml::table& root, const std::filesystem::path& base_dir = {}) {
  IngestConfig cfg;
  if (const auto* split = root["split"].as_table()) {
    const toml::node_view<const toml::node> s{split};
    if (auto v = s["seed"].value<std::int64_t>()) {
      if (*v < 0) throw ConfigError("split.seed must be non-negative");
      cfg.split.seed = static_cast<std::uint64_t>(*v);
    }
    if (auto v = s["train_pool_percent"].value<std::int64_t>()) cfg.split.train_pool_percent = int(*v);
    if (auto v = s["train_percent"].value<std::int64_t>()) cfg.split.train_percent = int(*v);
    for (int p : {cfg.split.train_pool_percent, cfg.split.train_percent})
      if (p < 0 || p > 100) throw ConfigError("split percentages must lie in [0, 100]");
  }
  const auto* anatomy = root["anatomy"].as_table();
  if (!anatomy) throw ConfigError("config needs at least one [anatomy.<name>] section");
  for (const auto& [key, node] : *anatomy) {
    const Anatomy a = anatomy_from_string(key.str());
    const auto* tbl = node.as_table();
    if (!tbl) throw ConfigError("anatomy." + std::string(key.str()) + " must be a table");
    const toml::node_view<const toml::node> t{tbl};
    AnatomyConfig c = default_anatomy_config(a);
    if (auto v = t["min_voxels"].value<std::int64_t>()) {
      if (*v < 0) throw ConfigError("min_voxels must be non-negative");
      c.rule.min_voxels = *v;
    }
    if (t["labels"]) c.rule.labels = detail::int_array<std::int64_t>(t["labels"], "labels");
    if (t["rib_labels"]) c.rule.rib_labels = detail::int_array<std::int64_t>(t["rib_labels"], "rib_labels");
    if (auto v = t["completeness"].value<std::string>()) {
      if (*v == "full-rib-set") c.rule.completeness = Completeness::FullRibSet;
      else if (*v == "none") c.rule.completeness = Completeness::None;
      else throw ConfigError("unknown completeness check '" + *v + "'");
    }
    if (const auto* arr = t["subsets"].as_array()) {
      for (const auto& el : *arr) {
        const auto v = el.template value<std::string>();
        if (!v) throw ConfigError("subsets must contain strings only");
        c.rule.subsets.push_back(*v);
      }
    }
    if (auto v = t["heuristic_min_extent_mm"].value<double>()) c.rule.heuristic_min_extent_mm = *v;
    if (auto v = t["manual_reject_list"].value<std::string>()) {
      std::filesystem::path p(*v);
      if (p.is_relative()) p = base_dir / p;
      c.rule.manual_reject_list = read_id_list(p);
    }
    if (t["dims"]) {
      const auto d = detail::int_array<std::int64_t>(t["dims"], "dims");
      if (d.size() != 3 || d[0] <= 0 || d[1] <= 0 || d[2] <= 0) throw ConfigError("dims must be three positive integers");
      c.target.dims = {d[0], d[1], d[2]};
    }
    if (auto v = t["spacing"].value<double>()) {
      if (!(*v > 0.0)) throw ConfigError("spacing must be positive");
      c.target.spacing_mm = *v;
    }
    cfg.anatomies[a] = std::move(c);
  }
  return cfg;
}

inline IngestConfig load_config(const std::filesystem::path& path) {
  try {
    const toml::table root = toml::parse_file(path.string());
    return parse_config(root, path.parent_path());
  } catch (const toml::parse_error& e) {
    throw ConfigError("invalid TOML in " + path.string() + ": " + std::string(e.description()));
  }
}

/// All four anatomies with their defaults.
inline IngestConfig default_config() {
  IngestConfig cfg;
  for (Anatomy a : kAllAnatomies) cfg.anatomies[a] = default_anatomy_config(a);
  return cfg;
}

}  // namespace xr23d::ingestion
