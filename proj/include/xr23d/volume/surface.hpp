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
#include <vector>

#include "xr23d/volume/volume.hpp"

namespace xr23d {

/// Foreground voxel with at least one background face neighbour; the lattice
/// edge counts as background.
template <typename T>
bool is_boundary_voxel(const Volume<T>& mask, std::int64_t x, std::int64_t y, std::int64_t z) {
  if (mask(x, y, z) == T{0}) return false;
  return mask.value_or(x - 1, y, z) == T{0} || mask.value_or(x + 1, y, z) == T{0} ||
         mask.value_or(x, y - 1, z) == T{0} || mask.value_or(x, y + 1, z) == T{0} ||
         mask.value_or(x, y, z - 1) == T{0} || mask.value_or(x, y, z + 1) == T{0};
}

template <typename T>
BinaryMask boundary_mask(const Volume<T>& mask) {
  BinaryMask out = mask.template like<std::uint8_t>();
  const Dims& d = mask.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) out(x, y, z) = is_boundary_voxel(mask, x, y, z) ? 1 : 0;
  return out;
}

/// Linear indices of boundary voxels in memory order.
template <typename T>
std::vector<std::size_t> boundary_indices(const Volume<T>& mask) {
  std::vector<std::size_t> out;
  const Dims& d = mask.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x)
        if (is_boundary_voxel(mask, x, y, z)) out.push_back(mask.index(x, y, z));
  return out;
}

/// World coordinates of boundary voxel centers.
template <typename T>
std::vector<Vec3> boundary_points(const Volume<T>& mask) {
  std::vector<Vec3> out;
  for (std::size_t i : boundary_indices(mask)) {
    const auto c = mask.coords(i);
    out.push_back(mask.index_to_world(c[0], c[1], c[2]));
  }
  return out;
}

struct SurfaceFace {
  Vec3 point;   ///< face center, world mm
  Vec3 normal;  ///< outward unit normal, world
};

/// Centers of the exposed voxel faces. These sit on the voxelized surface
/// itself rather than half a voxel inside it, which keeps shape fits
/// unbiased.
template <typename T>
std::vector<SurfaceFace> surface_faces(const Volume<T>& mask) {
  static constexpr int kOffsets[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  std::vector<SurfaceFace> out;
  const Dims& d = mask.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (mask(x, y, z) == T{0}) continue;
        for (const auto& o : kOffsets) {
          if (mask.value_or(x + o[0], y + o[1], z + o[2]) != T{0}) continue;
          const Vec3 offset(0.5 * o[0], 0.5 * o[1], 0.5 * o[2]);
          out.push_back({mask.index_to_world(Vec3(double(x), double(y), double(z)) + offset),
                         mask.direction() * Vec3(o[0], o[1], o[2])});
        }
      }
  return out;
}

}  // namespace xr23d
