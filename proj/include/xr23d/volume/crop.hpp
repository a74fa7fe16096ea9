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

#include "xr23d/core/error.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d {

/// First source index of a `target`-long window centred on continuous index
/// `center`. Halves round up, so an even window centred on a voxel center
/// takes the extra voxel on the high side. The small slack absorbs world to
/// index round-off.
inline std::int64_t window_start(double center, std::int64_t target) {
  return static_cast<std::int64_t>(std::floor(center - 0.5 * double(target - 1) + 0.5 + 1e-9));
}

/// Crops and/or pads to `target_dims` around the world point `center`.
/// Retained voxels keep their world coordinates; voxels outside the source
/// take `fill` (0 unless the caller needs e.g. air for CT).
template <typename T>
Volume<T> crop_or_pad(const Volume<T>& grid, const Dims& target_dims, const Vec3& center, T fill = T{}) {
  for (auto n : target_dims) {
    if (n <= 0) throw GeometryError("target dims must be positive");
  }
  const Vec3 c = grid.world_to_index(center);
  const std::int64_t sx = window_start(c.x(), target_dims[0]);
  const std::int64_t sy = window_start(c.y(), target_dims[1]);
  const std::int64_t sz = window_start(c.z(), target_dims[2]);
  Volume<T> out(target_dims, grid.spacing(), grid.index_to_world(sx, sy, sz), grid.direction(), fill);
  for (std::int64_t k = 0; k < target_dims[2]; ++k)
    for (std::int64_t j = 0; j < target_dims[1]; ++j)
      for (std::int64_t i = 0; i < target_dims[0]; ++i)
        if (grid.contains(sx + i, sy + j, sz + k)) out(i, j, k) = grid(sx + i, sy + j, sz + k);
  return out;
}

/// World coordinate of the geometric center of the lattice.
template <typename T>
Vec3 volume_center(const Volume<T>& grid) {
  const auto& d = grid.dims();
  return grid.index_to_world(Vec3(0.5 * double(d[0] - 1), 0.5 * double(d[1] - 1), 0.5 * double(d[2] - 1)));
}

}  // namespace xr23d
