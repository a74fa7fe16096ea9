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

#include <cstdint>

#include "xr23d/volume/volume.hpp"

namespace xr23d::phantom {

struct VertebraPhantomSpec {
  /// Canal depth along y in voxels.
  std::int64_t canal_ap = 14;
  Vec3 spacing = Vec3::Ones();
};

/// Box vertebra on a 64 x 96 x 40 lattice, anterior = +y, mirror-symmetric
/// about x = 31.5. Body 40 x 30 x 22 voxels, canal 16 wide, lamina 5 thick,
/// spinous process 6 wide and 25 long. Pedicles and lamina span z 12..27.
inline BinaryMask make_vertebra_phantom(const VertebraPhantomSpec& spec = {}) {
  BinaryMask m(Dims{64, 96, 40}, spec.spacing);
  auto fill = [&](std::int64_t x0, std::int64_t x1, std::int64_t y0, std::int64_t y1, std::int64_t z0,
                  std::int64_t z1) {
    for (std::int64_t z = z0; z <= z1; ++z)
      for (std::int64_t y = y0; y <= y1; ++y)
        for (std::int64_t x = x0; x <= x1; ++x) m(x, y, z) = 1;
  };
  const std::int64_t canal_y0 = 55 - spec.canal_ap;
  fill(12, 51, 55, 84, 9, 30);                           // body
  fill(19, 23, canal_y0, 54, 12, 27);                    // pedicles
  fill(40, 44, canal_y0, 54, 12, 27);
  fill(19, 44, canal_y0 - 5, canal_y0 - 1, 12, 27);      // lamina
  fill(29, 34, canal_y0 - 30, canal_y0 - 6, 14, 25);     // spinous process
  return m;
}

/// Solid ellipsoid without a canal.
inline BinaryMask make_solid_ellipsoid(const Vec3& semi_axes = Vec3(20, 15, 11)) {
  BinaryMask m(Dims{64, 64, 40}, Vec3::Ones());
  const Vec3 c(31.5, 31.5, 19.5);
  for (std::int64_t z = 0; z < 40; ++z)
    for (std::int64_t y = 0; y < 64; ++y)
      for (std::int64_t x = 0; x < 64; ++x) {
        const Vec3 q = (Vec3(double(x), double(y), double(z)) - c).cwiseQuotient(semi_axes);
        if (q.squaredNorm() <= 1.0) m(x, y, z) = 1;
      }
  return m;
}

}  // namespace xr23d::phantom
