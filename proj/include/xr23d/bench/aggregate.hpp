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

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "xr23d/bench/evaluation.hpp"

namespace xr23d::bench {

inline const std::string kAllGroup = "all";
inline const std::string kUnknownGroup = "unknown";

/// Mean and sample standard deviation (n - 1) over the valid values. Fewer
/// than two values give std 0; none gives NaN for both.
struct Stats {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
};

inline Stats summarize(const std::vector<double>& v) {
  Stats s;
  s.count = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / double(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0;
  return s;
}

struct GroupStats {
  std::string key;    ///< subgroup key, "all" for the ungrouped row
  std::string value;  ///< group value, "all" for the ungrouped row
  std::size_t samples = 0;
  std::map<std::string, Stats> stats;  ///< per metric column
};

namespace detail {

inline GroupStats group_stats(const std::vector<std::string>& columns,
                              const std::vector<const SampleRow*>& rows, std::string key, std::string value) {
  GroupStats g{std::move(key), std::move(value), rows.size(), {}};
  for (const auto& c : columns) {
    std::vector<double> vals;
    for (const auto* r : rows)
      if (const auto v = metric_value(*r, c)) vals.push_back(*v);
    g.stats[c] = summarize(vals);
  }
  return g;
}

}  // namespace detail

/// The "all" row first, then one row per (key, value) in key order. Each key
/// disaggregates the whole run on its own; samples without the key fall
/// into "unknown".
inline std::vector<GroupStats> aggregate(const EvaluationRun& run, const std::vector<std::string>& groupby) {
  const auto columns = metric_columns(run);
  std::vector<const SampleRow*> all;
  for (const auto& r : run.rows) all.push_back(&r);
  std::vector<GroupStats> out{detail::group_stats(columns, all, kAllGroup, kAllGroup)};
  for (const auto& key : groupby) {
    std::map<std::string, std::vector<const SampleRow*>> groups;
    for (const auto& r : run.rows) {
      const auto it = r.subgroup.find(key);
      groups[it == r.subgroup.end() || it->second.empty() ? kUnknownGroup : it->second].push_back(&r);
    }
    for (const auto& [value, rows] : groups) out.push_back(detail::group_stats(columns, rows, key, value));
  }
  return out;
}

}  // namespace xr23d::bench
