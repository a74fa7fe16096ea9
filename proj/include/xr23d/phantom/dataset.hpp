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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "xr23d/core/random.hpp"
#include "xr23d/volume/nifti.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d::phantom {

struct DatasetOptions {
  int cases_per_subset = 6;
  std::uint64_t seed = 0;
  /// Adds one case without seg.nii.gz so the skip report is exercised.
  bool include_broken_case = true;
};

/// Writes a small synthetic dataset in the ingestion layout:
/// `<root>/<subset>/<case>/{ct.nii.gz, seg.nii.gz, meta.json}` with an
/// ellipsoidal long-bone stand-in (label 1) and two stacked vertebral bodies
/// (labels 20, 21) per case, plus `<root>/ingest.toml` tuned to these sizes.
inline void write_synthetic_dataset(const std::filesystem::path& root, const DatasetOptions& opt = {}) {
  namespace fs = std::filesystem;
  Rng rng(opt.seed);
  const Dims dims{40, 40, 48};
  const Vec3 spacing(1.5, 1.5, 2.0);
  const char* subsets[] = {"SYNTH-A", "SYNTH-B"};
  for (const char* subset : subsets) {
    for (int c = 0; c < opt.cases_per_subset; ++c) {
      char name[32];
      std::snprintf(name, sizeof name, "case%03d", c);
      const fs::path dir = root / subset / name;
      fs::create_directories(dir);
      VoxelGrid ct(dims, spacing, Vec3(-30, -30, -48), Mat3::Identity(), -1000.0f);
      LabelGrid seg(dims, spacing, Vec3(-30, -30, -48));
      const Vec3 centre(uniform_real(rng, 12, 16), uniform_real(rng, 16, 24), uniform_real(rng, 20, 28));
      const Vec3 radii(uniform_real(rng, 4, 6), uniform_real(rng, 4, 6), uniform_real(rng, 10, 14));
      const double hu = uniform_real(rng, 700, 1300);
      const std::int64_t vx = 26 + std::int64_t(uniform_index(rng, 4)), vy = 18 + std::int64_t(uniform_index(rng, 4));
      for (std::int64_t z = 0; z < dims[2]; ++z)
        for (std::int64_t y = 0; y < dims[1]; ++y)
          for (std::int64_t x = 0; x < dims[0]; ++x) {
            const Vec3 q = (Vec3(double(x), double(y), double(z)) - centre).cwiseQuotient(radii);
            if (q.squaredNorm() <= 1.0) {
              seg(x, y, z) = 1;
              ct(x, y, z) = float(hu);
            } else if (std::abs(x - vx) <= 4 && std::abs(y - vy) <= 3 && z >= 10 && z < 34 && (z - 10) % 12 < 10) {
              seg(x, y, z) = z < 22 ? 20 : 21;
              ct(x, y, z) = 400.0f;
            }
          }
      ct[0] += float(uniform_real(rng, 0, 1));
      write_volume(ct, dir / "ct.nii.gz");
      write_volume(seg, dir / "seg.nii.gz");
      nlohmann::ordered_json meta;
      meta["subgroup"]["implant"] = std::string(subset) == "SYNTH-B" ? "true" : "false";
      const char* shapes[] = {"wedge", "biconcave", "crush"};
      const char* severities[] = {"mild", "moderate", "severe"};
      for (int k = 0; k < 2; ++k) {
        nlohmann::ordered_json v;
        v["label"] = 20 + k;
        v["level"] = k == 0 ? "L1" : "L2";
        const Vec3 idx(double(vx), double(vy), 10.0 + 12.0 * k + 4.5);
        const Vec3 w = ct.index_to_world(idx);
        v["centroid_mm"] = {w.x(), w.y(), w.z()};
        v["subgroup"]["shape"] = shapes[uniform_index(rng, 3)];
        v["subgroup"]["severity"] = severities[uniform_index(rng, 3)];
        meta["vertebrae"].push_back(v);
      }
      std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
    }
  }
  if (opt.include_broken_case) {
    const fs::path dir = root / "SYNTH-B" / "broken";
    fs::create_directories(dir);
    write_volume(VoxelGrid(dims, spacing), dir / "ct.nii.gz");
  }
  std::ofstream cfg(root / "ingest.toml");
  cfg << "[split]\nseed = " << opt.seed << "\n\n"
      << "[anatomy.femur]\nlabels = [1]\nmin_voxels = 500\ndims = [32, 32, 48]\nspacing = 1.5\n\n"
      << "[anatomy.vertebra]\nmin_voxels = 50\ndims = [16, 16, 16]\nspacing = 1.5\n";
}

}  // namespace xr23d::phantom
