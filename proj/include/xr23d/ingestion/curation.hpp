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
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "xr23d/ingestion/config.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d::ingestion {

enum class RejectReason { BelowThreshold, IncompleteStructure, ManualList, MissingFile };

inline std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::BelowThreshold: return "below-threshold";
    case RejectReason::IncompleteStructure: return "incomplete-structure";
    case RejectReason::ManualList: return "manual-list";
    case RejectReason::MissingFile: return "missing-file";
  }
  return "below-threshold";
}

struct CurationResult {
  std::optional<RejectReason> reject;
  /// The completeness decision came from the extent heuristic, not per-rib labels.
  bool heuristic = false;

  bool accepted() const { return !reject; }
};

/// Binary structure mask selected by `labels` (every non-zero label when empty).
inline BinaryMask structure_mask(const LabelGrid& seg, const std::vector<std::int64_t>& labels) {
  BinaryMask m = seg.like<std::uint8_t>();
  const std::set<std::int64_t> wanted(labels.begin(), labels.end());
  for (std::size_t i = 0; i < seg.size(); ++i)
    m[i] = (labels.empty() ? seg[i] != 0 : wanted.count(seg[i]) > 0) ? 1 : 0;
  return m;
}

/// Superior-inferior extent of the foreground in mm (voxel count along z times spacing).
inline double superior_extent_mm(const BinaryMask& mask) {
  std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = -1;
  const auto& d = mask.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x)
        if (mask(x, y, z)) {
          lo = std::min(lo, z);
          hi = std::max(hi, z);
        }
  return hi < 0 ? 0.0 : double(hi - lo + 1) * mask.spacing().z();
}

namespace detail {

inline CurationResult curate(const std::string& sample_id, std::int64_t foreground, const CurationRule& rule,
                             const LabelGrid* labels, const BinaryMask& mask) {
  CurationResult r;
  if (rule.manual_reject_list.count(sample_id)) {
    r.reject = RejectReason::ManualList;
    return r;
  }
  if (foreground < rule.min_voxels) {
    r.reject = RejectReason::BelowThreshold;
    return r;
  }
  if (rule.completeness == Completeness::FullRibSet) {
    if (labels && !rule.rib_labels.empty()) {
      std::set<std::int64_t> present;
      for (std::size_t i = 0; i < labels->size(); ++i)
        if ((*labels)[i] != 0) present.insert((*labels)[i]);
      for (std::int64_t l : rule.rib_labels)
        if (!present.count(l)) {
          r.reject = RejectReason::IncompleteStructure;
          return r;
        }
    } else {
      r.heuristic = true;
      if (superior_extent_mm(mask) < rule.heuristic_min_extent_mm) r.reject = RejectReason::IncompleteStructure;
    }
  }
  return r;
}

}  // namespace detail

/// Curation of a binary structure mask. Completeness checks fall back to the
/// extent heuristic since a binary mask carries no per-rib labels.
inline CurationResult curate_sample(const BinaryMask& mask, const CurationRule& rule, const std::string& sample_id = {}) {
  return detail::curate(sample_id, std::int64_t(count_foreground(mask)), rule, nullptr, mask);
}

/// Curation of a label map; the structure is the union of the rule's labels
/// (rib labels for the full-rib-set rule).
inline CurationResult curate_sample(const LabelGrid& seg, const CurationRule& rule, const std::string& sample_id = {}) {
  const auto& sel = rule.completeness == Completeness::FullRibSet && !rule.rib_labels.empty() ? rule.rib_labels
                                                                                           : rule.labels;
  const BinaryMask mask = structure_mask(seg, sel);
  return detail::curate(sample_id, std::int64_t(count_foreground(mask)), rule, &seg, mask);
}

}  // namespace xr23d::ingestion
