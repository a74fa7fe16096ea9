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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xr23d/core/error.hpp"
#include "xr23d/core/parallel.hpp"
#include "xr23d/core/random.hpp"
#include "xr23d/ingestion/config.hpp"
#include "xr23d/ingestion/curation.hpp"
#include "xr23d/ingestion/prepare.hpp"
#include "xr23d/volume/labels.hpp"
#include "xr23d/volume/nifti.hpp"

namespace xr23d::ingestion {

enum class Split { Train, Val, Test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

inline Split split_from_string(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw FormatError("unknown split '" + std::string(s) + "'");
}

struct SampleRecord {
  std::string sample_id;
  Anatomy anatomy = Anatomy::Femur;
  std::string source_subset;
  std::string ct_path;
  std::string mask_path;
  std::map<std::string, std::string> subgroup;
  Split split = Split::Train;
};

struct SkipEntry {
  std::string sample_id;
  std::string reason;
};

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
};

/// Group counts for `n` groups: pool = floor(n * pool%), train = floor(pool * train%).
inline SplitCounts split_counts(std::size_t n, const SplitSpec& spec) {
  SplitCounts c;
  const std::size_t pool = n * std::size_t(spec.train_pool_percent) / 100;
  c.train = pool * std::size_t(spec.train_percent) / 100;
  c.val = pool - c.train;
  c.test = n - pool;
  return c;
}

/// Assigns one split per distinct group key; every member of a group shares it.
/// Groups are sorted, shuffled with `spec.seed` and cut train | val | test.
inline std::map<std::string, Split> assign_group_splits(const std::vector<std::string>& group_keys,
                                                        const SplitSpec& spec) {
  std::vector<std::string> groups(group_keys.begin(), group_keys.end());
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  Rng rng(spec.seed);
  shuffle(groups, rng);
  const auto counts = split_counts(groups.size(), spec);
  std::map<std::string, Split> out;
  for (std::size_t i = 0; i < groups.size(); ++i)
    out[groups[i]] = i < counts.train ? Split::Train : i < counts.train + counts.val ? Split::Val : Split::Test;
  return out;
}

inline nlohmann::ordered_json to_json(const SampleRecord& r) {
  nlohmann::ordered_json j;
  j["sample_id"] = r.sample_id;
  j["anatomy"] = to_string(r.anatomy);
  j["source_subset"] = r.source_subset;
  j["ct_path"] = r.ct_path;
  j["mask_path"] = r.mask_path;
  j["subgroup"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.subgroup) j["subgroup"][k] = v;
  j["split"] = to_string(r.split);
  return j;
}

inline SampleRecord record_from_json(const nlohmann::json& j) {
  try {
    SampleRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.anatomy = anatomy_from_string(j.at("anatomy").get<std::string>());
    r.source_subset = j.at("source_subset").get<std::string>();
    r.ct_path = j.at("ct_path").get<std::string>();
    r.mask_path = j.at("mask_path").get<std::string>();
    if (j.contains("subgroup"))
      for (const auto& [k, v] : j.at("subgroup").items())
        r.subgroup[k] = v.is_string() ? v.get<std::string>() : v.dump();
    r.split = split_from_string(j.at("split").get<std::string>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest record: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed manifest record: ") + e.what());
  }
}

/// Rejects duplicate sample ids.
inline void check_unique_ids(const std::vector<SampleRecord>& records) {
  std::set<std::string> seen;
  for (const auto& r : records)
    if (!seen.insert(r.sample_id).second) throw ConsistencyError("duplicate sample_id '" + r.sample_id + "'");
}

inline void write_manifest(const std::vector<SampleRecord>& records, const std::filesystem::path& path) {
  check_unique_ids(records);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<SampleRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest: " + path.string());
  std::vector<SampleRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    records.push_back(record_from_json(j));
  }
  check_unique_ids(records);
  return records;
}

/// Resolves a manifest path against the manifest's directory.
inline std::filesystem::path resolve(const std::filesystem::path& manifest, const std::string& p) {
  const std::filesystem::path q(p);
  return q.is_absolute() ? q : manifest.parent_path() / q;
}

inline void write_skip_report(const std::vector<SkipEntry>& skips, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write skip report: " + path.string());
  for (const auto& s : skips) {
    nlohmann::ordered_json j;
    j["sample_id"] = s.sample_id;
    j["reason"] = s.reason;
    out << j.dump() << '\n';
  }
}

struct ManifestResult {
  std::vector<SampleRecord> records;
  std::vector<SkipEntry> skipped;
  std::vector<std::string> warnings;
};

namespace detail {

struct VertebraMeta {
  std::int64_t label = 0;
  std::string level;
  std::optional<Vec3> centroid_mm;
  std::map<std::string, std::string> subgroup;
};

struct CaseMeta {
  std::map<std::string, std::string> subgroup;
  std::optional<std::vector<VertebraMeta>> vertebrae;
};

inline std::map<std::string, std::string> string_map(const nlohmann::json& j) {
  std::map<std::string, std::string> m;
  for (const auto& [k, v] : j.items()) m[k] = v.is_string() ? v.get<std::string>() : v.dump();
  return m;
}

inline CaseMeta read_case_meta(const std::filesystem::path& path) {
  CaseMeta meta;
  if (!std::filesystem::exists(path)) return meta;
  std::ifstream in(path);
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.contains("subgroup")) meta.subgroup = string_map(j.at("subgroup"));
    if (j.contains("vertebrae")) {
      meta.vertebrae.emplace();
      for (const auto& v : j.at("vertebrae")) {
        VertebraMeta vm;
        vm.label = v.at("label").get<std::int64_t>();
        vm.level = v.contains("level") ? v.at("level").get<std::string>() : "label" + std::to_string(vm.label);
        if (v.contains("centroid_mm")) {
          const auto c = v.at("centroid_mm").get<std::vector<double>>();
          if (c.size() != 3) throw FormatError("centroid_mm needs three values");
          vm.centroid_mm = Vec3(c[0], c[1], c[2]);
        }
        if (v.contains("subgroup")) vm.subgroup = string_map(v.at("subgroup"));
        meta.vertebrae->push_back(std::move(vm));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed " + path.string() + ": " + e.what());
  }
  return meta;
}

struct WorkItem {
  Anatomy anatomy;
  std::string subset, case_id;
  std::filesystem::path dir;
};

struct WorkOutput {
  std::vector<SampleRecord> records;
  std::vector<std::string> groups;
  std::vector<SkipEntry> skipped;
  std::vector<std::string> warnings;
};

inline std::string base_id(const WorkItem& w) {
  return w.subset + "-" + w.case_id + "-" + std::string(to_string(w.anatomy));
}

}  // namespace detail

/// Scans `<root>/<subset>/<case>/{ct.nii.gz, seg.nii.gz[, meta.json]}`,
/// curates, prepares and writes volumes under `<out_dir>/volumes`, then
/// assigns splits per scan. Paths in the records are relative to `out_dir`.
inline ManifestResult build_manifest(const std::filesystem::path& root, const IngestConfig& config,
                                     const std::filesystem::path& out_dir, unsigned threads = 1) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError("dataset root is not a directory: " + root.string());
  fs::create_directories(out_dir / "volumes");

  std::vector<detail::WorkItem> items;
  std::vector<fs::path> subsets;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) subsets.push_back(e.path());
  std::sort(subsets.begin(), subsets.end());
  for (const auto& [anatomy, acfg] : config.anatomies) {
    for (const auto& subset_dir : subsets) {
      const std::string subset = subset_dir.filename().string();
      const auto& allowed = acfg.rule.subsets;
      if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), subset) == allowed.end()) continue;
      std::vector<fs::path> cases;
      for (const auto& e : fs::directory_iterator(subset_dir))
        if (e.is_directory()) cases.push_back(e.path());
      std::sort(cases.begin(), cases.end());
      for (const auto& c : cases) items.push_back({anatomy, subset, c.filename().string(), c});
    }
  }

  std::vector<detail::WorkOutput> outputs(items.size());
  parallel_for(items.size(), threads, [&](std::size_t i) {
    const auto& w = items[i];
    auto& out = outputs[i];
    const auto& acfg = config.anatomies.at(w.anatomy);
    const std::string id = detail::base_id(w);
    const fs::path ct_file = w.dir / "ct.nii.gz", seg_file = w.dir / "seg.nii.gz";
    if (!fs::exists(ct_file) || !fs::exists(seg_file)) {
      out.skipped.push_back({id, std::string(to_string(RejectReason::MissingFile))});
      return;
    }
    const auto meta = detail::read_case_meta(w.dir / "meta.json");
    const LabelGrid seg = read_volume<std::int32_t>(seg_file);
    const VoxelGrid ct = read_volume<float>(ct_file);
    if (!ct.same_geometry(seg, 1e-4)) {
      out.skipped.push_back({id, "geometry-mismatch"});
      return;
    }

    auto emit = [&](const std::string& sample_id, const BinaryMask& mask, std::optional<Vec3> centre,
                    std::map<std::string, std::string> subgroup) {
      PreparedSample prepared;
      try {
        prepared = prepare_sample(ct, mask, acfg.target, centre);
      } catch (const PreparationError&) {
        out.skipped.push_back({sample_id, "preparation-failed"});
        return;
      }
      if (prepared.anisotropy_warning) out.warnings.push_back(sample_id + ": anisotropic source spacing");
      const std::string ct_rel = "volumes/" + sample_id + "_ct.nii.gz";
      const std::string mask_rel = "volumes/" + sample_id + "_mask.nii.gz";
      write_volume(prepared.ct, out_dir / ct_rel);
      write_volume(prepared.mask, out_dir / mask_rel);
      SampleRecord r;
      r.sample_id = sample_id;
      r.anatomy = w.anatomy;
      r.source_subset = w.subset;
      r.ct_path = ct_rel;
      r.mask_path = mask_rel;
      r.subgroup = std::move(subgroup);
      out.records.push_back(std::move(r));
      out.groups.push_back(w.subset + "/" + w.case_id);
    };

    if (w.anatomy == Anatomy::Vertebra) {
      std::vector<detail::VertebraMeta> vertebrae;
      if (meta.vertebrae) {
        vertebrae = *meta.vertebrae;
      } else {
        for (const auto& [label, count] : label_histogram(seg))
          if (label != 0) vertebrae.push_back({label, "label" + std::to_string(label), std::nullopt, {}});
      }
      for (const auto& v : vertebrae) {
        const std::string sid = id + "-" + v.level;
        const BinaryMask mask = extract_label(seg, v.label).mask;
        const auto verdict = curate_sample(mask, acfg.rule, sid);
        if (!verdict.accepted()) {
          out.skipped.push_back({sid, std::string(to_string(*verdict.reject))});
          continue;
        }
        auto sub = meta.subgroup;
        for (const auto& [k, val] : v.subgroup) sub[k] = val;
        sub["level"] = v.level;
        emit(sid, mask, v.centroid_mm, std::move(sub));
      }
      return;
    }

    const auto verdict = curate_sample(seg, acfg.rule, id);
    if (!verdict.accepted()) {
      out.skipped.push_back({id, std::string(to_string(*verdict.reject))});
      return;
    }
    const auto& sel = acfg.rule.completeness == Completeness::FullRibSet && !acfg.rule.rib_labels.empty()
                          ? acfg.rule.rib_labels
                          : acfg.rule.labels;
    auto sub = meta.subgroup;
    if (verdict.heuristic) sub["completeness"] = "heuristic";
    emit(id, structure_mask(seg, sel), std::nullopt, std::move(sub));
  });

  ManifestResult result;
  std::vector<std::string> record_groups;
  for (auto& o : outputs) {
    for (auto& r : o.records) result.records.push_back(std::move(r));
    for (auto& g : o.groups) record_groups.push_back(std::move(g));
    for (auto& s : o.skipped) result.skipped.push_back(std::move(s));
    for (auto& m : o.warnings) result.warnings.push_back(std::move(m));
  }
  for (Anatomy a : kAllAnatomies) {
    std::vector<std::string> groups;
    for (std::size_t i = 0; i < result.records.size(); ++i)
      if (result.records[i].anatomy == a) groups.push_back(record_groups[i]);
    const auto splits = assign_group_splits(groups, config.split);
    for (std::size_t i = 0; i < result.records.size(); ++i)
      if (result.records[i].anatomy == a) result.records[i].split = splits.at(record_groups[i]);
  }
  auto by_id = [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; };
  std::sort(result.records.begin(), result.records.end(), by_id);
  std::sort(result.skipped.begin(), result.skipped.end(), by_id);
  check_unique_ids(result.records);
  return result;
}

}  // namespace xr23d::ingestion
