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
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "xr23d/bench/aggregate.hpp"
#include "xr23d/bench/domain_shift.hpp"
#include "xr23d/bench/evaluation.hpp"
#include "xr23d/bench/ranking.hpp"
#include "xr23d/core/error.hpp"
#include "xr23d/core/format.hpp"

namespace xr23d::bench {

inline constexpr int kSummarySchemaVersion = 1;

// Per-sample, group and long-format files carry full precision; the human
// facing tables (summary table, domain shift) round to two decimals.

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + csv_field(fields[i]);
  return line + "\n";
}

inline std::string value_text(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? format_exact(*v) : std::string();
}

inline nlohmann::ordered_json number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<std::string> subgroup_keys(const EvaluationRun& run) {
  std::set<std::string> keys;
  for (const auto& r : run.rows)
    for (const auto& [k, v] : r.subgroup) keys.insert(k);
  return {keys.begin(), keys.end()};
}

inline std::string subgroup_value(const SampleRow& r, const std::string& key) {
  const auto it = r.subgroup.find(key);
  return it == r.subgroup.end() ? std::string() : it->second;
}

}  // namespace detail

inline std::string per_sample_csv(const EvaluationRun& run) {
  const auto cols = metric_columns(run);
  const auto keys = detail::subgroup_keys(run);
  std::vector<std::string> header{"sample_id", "model", "anatomy", "source_subset", "prediction_missing", "degenerate"};
  header.insert(header.end(), cols.begin(), cols.end());
  for (const auto& k : keys) header.push_back("subgroup." + k);
  std::string text = detail::csv_line(header);
  for (const auto& r : run.rows) {
    std::vector<std::string> f{r.sample_id,
                               run.model_name,
                               r.anatomy,
                               r.source_subset,
                               r.prediction_missing ? "1" : "0",
                               std::string(metrics::to_string(r.metrics.degenerate))};
    for (const auto& c : cols) f.push_back(detail::value_text(metric_value(r, c)));
    for (const auto& k : keys) f.push_back(detail::subgroup_value(r, k));
    text += detail::csv_line(f);
  }
  return text;
}

inline std::string group_csv(const EvaluationRun& run, const std::vector<GroupStats>& groups) {
  const auto cols = metric_columns(run);
  std::vector<std::string> header{"model", "group_key", "group_value", "samples"};
  for (const auto& c : cols)
    for (const char* s : {"_mean", "_std", "_count"}) header.push_back(c + s);
  std::string text = detail::csv_line(header);
  for (const auto& g : groups) {
    std::vector<std::string> f{run.model_name, g.key, g.value, std::to_string(g.samples)};
    for (const auto& c : cols) {
      const auto it = g.stats.find(c);
      const Stats s = it == g.stats.end() ? Stats{} : it->second;
      f.push_back(detail::value_text(s.mean));
      f.push_back(detail::value_text(s.std));
      f.push_back(std::to_string(s.count));
    }
    text += detail::csv_line(f);
  }
  return text;
}

/// Plot-ready long format: one line per (sample, metric).
inline std::string long_csv(const EvaluationRun& run) {
  const auto cols = metric_columns(run);
  const auto keys = detail::subgroup_keys(run);
  std::vector<std::string> header{"model", "sample_id", "anatomy", "source_subset", "metric", "value"};
  for (const auto& k : keys) header.push_back("subgroup." + k);
  std::string text = detail::csv_line(header);
  for (const auto& r : run.rows)
    for (const auto& c : cols) {
      std::vector<std::string> f{run.model_name, r.sample_id, r.anatomy, r.source_subset, c,
                                 detail::value_text(metric_value(r, c))};
      for (const auto& k : keys) f.push_back(detail::subgroup_value(r, k));
      text += detail::csv_line(f);
    }
  return text;
}

inline nlohmann::ordered_json summary_json(const EvaluationRun& run, const std::vector<GroupStats>& groups) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["run_id"] = run.run_id;
  j["model"] = run.model_name;
  j["manifest"] = run.manifest;
  j["tau_mm"] = run.tau;
  j["samples"] = run.rows.size();
  j["missing_predictions"] = run.missing;
  std::size_t degenerate = 0;
  for (const auto& r : run.rows) degenerate += r.metrics.degenerate != metrics::Degenerate::None;
  j["degenerate_rows"] = degenerate;
  nlohmann::ordered_json gs = nlohmann::ordered_json::array();
  for (const auto& g : groups) {
    nlohmann::ordered_json e;
    e["key"] = g.key;
    e["value"] = g.value;
    e["samples"] = g.samples;
    nlohmann::ordered_json m;
    for (const auto& [c, s] : g.stats) m[c] = {{"mean", detail::number(s.mean)}, {"std", detail::number(s.std)}, {"count", s.count}};
    e["metrics"] = m;
    gs.push_back(e);
  }
  j["groups"] = gs;
  return j;
}

/// Summary table: one line per run, Dice in percent, two decimals.
inline std::string summary_table_csv(const std::vector<EvaluationRun>& runs, const std::string& dataset) {
  const double tau = runs.empty() ? metrics::kDefaultTau : runs.front().tau;
  std::string text = detail::csv_line(
      {"Dataset", "Method", "Dice(%)", "HD95(mm)", "ASD(mm)", "NSD@" + format_exact(tau) + "mm"});
  for (const auto& run : runs) {
    const auto all = aggregate(run, {}).front();
    const auto mean = [&](const std::string& c) { return all.stats.at(c).mean; };
    text += detail::csv_line({dataset, run.model_name, format_fixed(100.0 * mean("dsc")), format_fixed(mean("hd95_mm")),
                              format_fixed(mean("asd_mm")), format_fixed(mean(metrics::nsd_name(run.tau)))});
  }
  return text;
}

inline std::string domain_shift_csv(const std::vector<DomainShiftReport>& reports) {
  std::vector<std::string> header{"Method", "In-domain Dice(%)"};
  if (!reports.empty())
    for (const auto& e : reports.front().ood) {
      header.push_back(e.subset + " Dice(%)");
      header.push_back("Delta " + e.subset);
    }
  std::string text = detail::csv_line(header);
  for (const auto& r : reports) {
    std::vector<std::string> f{r.model_name, format_fixed(r.in_domain_mean)};
    for (const auto& e : r.ood) {
      f.push_back(format_fixed(e.ood_mean));
      f.push_back(format_fixed(e.delta));
    }
    text += detail::csv_line(f);
  }
  return text;
}

inline nlohmann::ordered_json to_json(const RankingStabilityResult& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["mode"] = r.mode == Resampling::Exhaustive ? "exhaustive" : "bootstrap";
  j["n_bootstrap"] = r.n_bootstrap;
  j["seed"] = r.seed;
  nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
  for (const auto& t : r.tasks) {
    nlohmann::ordered_json tj;
    tj["task"] = t.task;
    tj["resamples"] = t.resamples;
    nlohmann::ordered_json models = nlohmann::ordered_json::array();
    for (std::size_t m = 0; m < t.models.size(); ++m) {
      nlohmann::ordered_json dist;
      for (const auto& [rank, p] : t.distribution[m]) dist[format_exact(rank)] = p;
      models.push_back({{"model", t.models[m]}, {"mean_rank", t.mean_rank[m]}, {"rank_probability", dist}});
    }
    tj["models"] = models;
    tasks.push_back(tj);
  }
  j["tasks"] = tasks;
  return j;
}

/// Long-format rank probabilities for stacked-bar plots.
inline std::string ranking_csv(const RankingStabilityResult& r) {
  std::string text = detail::csv_line({"task", "model", "rank", "probability"});
  for (const auto& t : r.tasks)
    for (std::size_t m = 0; m < t.models.size(); ++m)
      for (const auto& [rank, p] : t.distribution[m])
        text += detail::csv_line({t.task, t.models[m], format_exact(rank), format_exact(p)});
  return text;
}

struct ReportPaths {
  std::filesystem::path per_sample, groups, long_format, summary, summary_table;
};

/// Writes every per-run report into `dir` with `<model>_` prefixed names.
inline ReportPaths emit_reports(const EvaluationRun& run, const std::vector<std::string>& groupby,
                                const std::filesystem::path& dir, const std::string& dataset = "") {
  const auto groups = aggregate(run, groupby);
  const std::string stem = run.model_name.empty() ? "run" : run.model_name;
  ReportPaths p{dir / (stem + "_per_sample.csv"), dir / (stem + "_groups.csv"), dir / (stem + "_long.csv"),
                dir / (stem + "_summary.json"), dir / (stem + "_summary_table.csv")};
  detail::write_text(p.per_sample, per_sample_csv(run));
  detail::write_text(p.groups, group_csv(run, groups));
  detail::write_text(p.long_format, long_csv(run));
  detail::write_text(p.summary, summary_json(run, groups).dump(2) + "\n");
  detail::write_text(p.summary_table, summary_table_csv({run}, dataset.empty() ? stem : dataset));
  return p;
}

}  // namespace xr23d::bench
