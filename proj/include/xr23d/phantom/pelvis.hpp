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
#include <vector>

#include "xr23d/morphometry/pelvis.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d::phantom {

struct PelvisPhantomSpec {
  /// Integer voxel displacement of the right ASIS stud tip (y, z).
  std::int64_t asis_r_dy = 0, asis_r_dz = 0;
  /// Whole-pelvis lattice shift in voxels.
  std::array<std::int64_t, 3> shift{0, 0, 0};
  bool include_left = true;
  bool include_right = true;
};

struct PelvisPhantom {
  BinaryMask mask;
  morph::PelvicLandmarks truth;
};

/// Box-built hemipelves (ilium, acetabular body, pubis, ischium) with studs
/// marking the ASIS, PSIS and ischial spine. The left half mirrors the right
/// about x = 47.5 on a 96 x 88 x 96 lattice at 1 mm. Each stud tip face holds
/// exactly 25 voxels so the expected landmarks follow from the construction.
inline PelvisPhantom make_pelvis_phantom(const PelvisPhantomSpec& spec = {}) {
  struct Box {
    std::int64_t x0, x1, y0, y1, z0, z1;  // inclusive
  };
  const std::int64_t dy = spec.asis_r_dy, dz = spec.asis_r_dz;
  const std::vector<Box> right_common = {
      {60, 75, 20, 60, 50, 90},  // ilium
      {56, 70, 40, 60, 30, 50},  // acetabular body
      {50, 62, 55, 65, 10, 30},  // pubis
      {56, 66, 25, 40, 10, 35},  // ischium
      {62, 66, 14, 19, 80, 84},  // PSIS stud
      {52, 55, 28, 32, 18, 22},  // ischial spine stud
  };
  const Box asis_right{66, 70, 60, 66 + dy, 80 + dz, 84 + dz};
  const Box asis_left{66, 70, 60, 66, 80, 84};

  PelvisPhantom out;
  out.mask = BinaryMask(Dims{96, 88, 96}, Vec3(1, 1, 1));
  const auto& sh = spec.shift;
  auto paint = [&](const Box& b, bool mirror) {
    for (std::int64_t z = b.z0; z <= b.z1; ++z)
      for (std::int64_t y = b.y0; y <= b.y1; ++y)
        for (std::int64_t x = b.x0; x <= b.x1; ++x) out.mask((mirror ? 95 - x : x) + sh[0], y + sh[1], z + sh[2]) = 1;
  };
  if (spec.include_right) {
    for (const auto& b : right_common) paint(b, false);
    paint(asis_right, false);
  }
  if (spec.include_left) {
    for (const auto& b : right_common) paint(b, true);
    paint(asis_left, true);
  }

  const Vec3 s = Vec3(double(sh[0]), double(sh[1]), double(sh[2]));
  auto right_pt = [](const Vec3& p) { return p; };
  auto left_pt = [](const Vec3& p) { return Vec3(95.0 - p.x(), p.y(), p.z()); };
  // Pubic tubercle: the 39 voxels scoring y - z >= 54 on the pubis front-bottom edge.
  const Vec3 pt(56.0, (13 * 65.0 + 13 * 64.0 + 13 * 65.0) / 39.0, (13 * 10.0 + 13 * 10.0 + 13 * 11.0) / 39.0);
  using morph::PelvicLandmark;
  auto& t = out.truth;
  if (spec.include_right) {
    t[PelvicLandmark::AsisR] = right_pt(Vec3(68, 66 + double(dy), 82 + double(dz))) + s;
    t[PelvicLandmark::PsisR] = right_pt(Vec3(64, 14, 82)) + s;
    t[PelvicLandmark::PtR] = right_pt(pt) + s;
    t[PelvicLandmark::IsR] = right_pt(Vec3(52, 30, 20)) + s;
  }
  if (spec.include_left) {
    t[PelvicLandmark::AsisL] = left_pt(Vec3(68, 66, 82)) + s;
    t[PelvicLandmark::PsisL] = left_pt(Vec3(64, 14, 82)) + s;
    t[PelvicLandmark::PtL] = left_pt(pt) + s;
    t[PelvicLandmark::IsL] = left_pt(Vec3(52, 30, 20)) + s;
  }
  return out;
}

}  // namespace xr23d::phantom
