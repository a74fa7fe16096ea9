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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xr23d/core/error.hpp"
#include "xr23d/core/parallel.hpp"
#include "xr23d/ingestion/manifest.hpp"
#include "xr23d/metrics/segmentation_metrics.hpp"
#include "xr23d/morphometry/femur.hpp"
#include "xr23d/morphometry/pelvis.hpp"
#include "xr23d/morphometry/vertebra.hpp"
#include "xr23d/volume/nifti.hpp"

namespace xr23d::bench {

using OptionalValues = std::map<std::string, std::optional<double>>;

struct SampleRow {
  std::string sample_id;
  std::string anatomy;
  std::string source_subset;
  metrics::MetricRecord metrics;
  /// Morphometry errors (prediction vs ground truth); empty for anatomies
  /// without a morphometry module.
  OptionalValues morphometry;
  std::map<std::string, std::string> subgroup;
  bool prediction_missing = false;
};

struct EvaluationRun {
  std::string run_id;
  std::string manifest;
  std::string model_name;
  double tau = metrics::kDefaultTau;
  std::vector<SampleRow> rows;  ///< sorted by sample_id
  std::vector<std::string> missing;
};

struct EvalOptions {
  double tau = metrics::kDefaultTau;
  unsigned threads = 1;
  bool morphometry = true;
  ingestion::Split split = ingestion::Split::Test;
  std::string run_id;
};

inline std::filesystem::path prediction_path(const std::filesystem::path& pred_dir, const std::string& sample_id) {
  return pred_dir / (sample_id + ".nii.gz");
}

namespace detail {

inline std::optional<double> finite(double v) {
  return std::isfinite(v) ? std::optional<double>(v) : std::nullopt;
}

inline OptionalValues morphometry_errors(ingestion::Anatomy anatomy, const BinaryMask& gt, const BinaryMask& pred) {
  using ingestion::Anatomy;
  switch (anatomy) {
    case Anatomy::Femur: {
      const auto e = morph::femur_errors(morph::analyze_femur(pred), morph::analyze_femur(gt));
      return {{"fhr_mm", finite(e.fhr_mm)},
              {"nsa_deg", finite(e.nsa_deg)},
              {"fhc_mm", finite(e.fhc_mm)},
              {"fna_deg", finite(e.fna_deg)},
              {"fda_deg", finite(e.fda_deg)}};
    }
    case Anatomy::Hip: {
      // Split the prediction at the ground-truth mid-plane.
      if (count_foreground(gt) == 0)
        return morph::landmark_errors(morph::extract_pelvic_landmarks(gt), morph::extract_pelvic_landmarks(pred));
      const double mid = foreground_centroid(gt).x();
      return morph::landmark_errors(morph::extract_pelvic_landmarks(gt, mid),
                                    morph::extract_pelvic_landmarks(pred, mid));
    }
    case Anatomy::Vertebra:
      return morph::morphometry_errors(morph::vertebra_morphometry(gt), morph::vertebra_morphometry(pred));
    case Anatomy::Rib:
      break;
  }
  return {};
}

}  // namespace detail

/// Scores a single ground-truth / prediction pair into a row.
inline SampleRow evaluate_sample(const ingestion::SampleRecord& rec, const BinaryMask& gt,
                                 const std::optional<BinaryMask>& pred, const EvalOptions& opt) {
  SampleRow row;
  row.sample_id = rec.sample_id;
  row.anatomy = std::string(ingestion::to_string(rec.anatomy));
  row.source_subset = rec.source_subset;
  row.subgroup = rec.subgroup;
  row.prediction_missing = !pred;
  // A missing prediction is scored as an empty mask, never dropped.
  const BinaryMask empty = gt.like<std::uint8_t>();
  const BinaryMask& p = pred ? *pred : empty;
  row.metrics = metrics::evaluate_pair(gt, p, opt.tau);
  if (opt.morphometry) row.morphometry = detail::morphometry_errors(rec.anatomy, gt, p);
  return row;
}

/// One row per sample of the selected split. Predictions are read from
/// `<pred_dir>/<sample_id>.nii.gz`.
inline EvaluationRun evaluate_run(const std::filesystem::path& manifest_path, const std::filesystem::path& pred_dir,
                                  const std::string& model_name, const EvalOptions& opt = {}) {
  std::vector<ingestion::SampleRecord> records;
  for (auto& r : ingestion::read_manifest(manifest_path))
    if (r.split == opt.split) records.push_back(std::move(r));
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });

  EvaluationRun run;
  run.run_id = opt.run_id.empty() ? model_name : opt.run_id;
  run.manifest = manifest_path.string();
  run.model_name = model_name;
  run.tau = opt.tau;
  run.rows.resize(records.size());
  parallel_for(records.size(), opt.threads, [&](std::size_t i) {
    const auto& rec = records[i];
    const BinaryMask gt = read_volume<std::uint8_t>(ingestion::resolve(manifest_path, rec.mask_path));
    std::optional<BinaryMask> pred;
    const auto pp = prediction_path(pred_dir, rec.sample_id);
    if (std::filesystem::exists(pp)) pred = read_volume<std::uint8_t>(pp);
    run.rows[i] = evaluate_sample(rec, gt, pred, opt);
  });
  for (const auto& row : run.rows)
    if (row.prediction_missing) run.missing.push_back(row.sample_id);
  if (run.missing.size() == run.rows.size())
    throw EmptyRunError("no predictions in " + pred_dir.string() + " match the " +
                        std::string(ingestion::to_string(opt.split)) + " split of " + manifest_path.string());
  return run;
}

/// Metric columns in report order: segmentation metrics, then the sorted
/// union of morphometry error keys.
inline std::vector<std::string> metric_columns(const EvaluationRun& run) {
  std::vector<std::string> cols{"dsc", "hd95_mm", "asd_mm", metrics::nsd_name(run.tau)};
  std::set<std::string> morph;
  for (const auto& r : run.rows)
    for (const auto& [k, v] : r.morphometry) morph.insert(k);
  cols.insert(cols.end(), morph.begin(), morph.end());
  return cols;
}

inline std::optional<double> metric_value(const SampleRow& row, const std::string& name) {
  if (name == "dsc") return row.metrics.dsc;
  if (name == "hd95_mm") return row.metrics.hd95;
  if (name == "asd_mm") return row.metrics.asd;
  if (name.rfind("nsd@", 0) == 0) return row.metrics.nsd;
  const auto it = row.morphometry.find(name);
  return it == row.morphometry.end() ? std::nullopt : it->second;
}

inline nlohmann::ordered_json to_json(const EvaluationRun& run) {
  nlohmann::ordered_json j;
  j["run_id"] = run.run_id;
  j["manifest"] = run.manifest;
  j["model"] = run.model_name;
  j["tau_mm"] = run.tau;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : run.rows) {
    nlohmann::ordered_json rj;
    rj["sample_id"] = r.sample_id;
    rj["anatomy"] = r.anatomy;
    rj["source_subset"] = r.source_subset;
    rj["prediction_missing"] = r.prediction_missing;
    rj["degenerate"] = metrics::to_string(r.metrics.degenerate);
    rj["dsc"] = r.metrics.dsc;
    rj["hd95_mm"] = r.metrics.hd95;
    rj["asd_mm"] = r.metrics.asd;
    rj["nsd"] = r.metrics.nsd;
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.morphometry) m[k] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    rj["morphometry"] = m;
    rj["subgroup"] = r.subgroup;
    rows.push_back(rj);
  }
  j["rows"] = rows;
  return j;
}

inline EvaluationRun run_from_json(const nlohmann::json& j) {
  try {
    EvaluationRun run;
    run.run_id = j.at("run_id").get<std::string>();
    run.manifest = j.at("manifest").get<std::string>();
    run.model_name = j.at("model").get<std::string>();
    run.tau = j.at("tau_mm").get<double>();
    for (const auto& rj : j.at("rows")) {
      SampleRow r;
      r.sample_id = rj.at("sample_id").get<std::string>();
      r.anatomy = rj.at("anatomy").get<std::string>();
      r.source_subset = rj.at("source_subset").get<std::string>();
      r.prediction_missing = rj.at("prediction_missing").get<bool>();
      r.metrics.degenerate = metrics::degenerate_from_string(rj.at("degenerate").get<std::string>());
      r.metrics.dsc = rj.at("dsc").get<double>();
      r.metrics.hd95 = rj.at("hd95_mm").get<double>();
      r.metrics.asd = rj.at("asd_mm").get<double>();
      r.metrics.nsd = rj.at("nsd").get<double>();
      r.metrics.tau = run.tau;
      for (const auto& [k, v] : rj.at("morphometry").items())
        r.morphometry[k] = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      r.subgroup = rj.at("subgroup").get<std::map<std::string, std::string>>();
      if (r.prediction_missing) run.missing.push_back(r.sample_id);
      run.rows.push_back(std::move(r));
    }
    return run;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed run file: ") + e.what());
  }
}

}  // namespace xr23d::bench
