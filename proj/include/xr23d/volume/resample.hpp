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
#include <cstdint>
#include <stdexcept>
#include <type_traits>

#include "xr23d/core/error.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d {

enum class Interpolation { Nearest, Trilinear };

/// Spacing ratios above this mark a volume as too anisotropic for DRR work.
inline constexpr double kMaxAnisotropy = 20.0;

inline double anisotropy_ratio(const Vec3& spacing) { return spacing.maxCoeff() / spacing.minCoeff(); }

/// How off-lattice neighbours contribute when interpolating.
enum class EdgePolicy {
  /// Positions within half a voxel of the lattice replicate the edge voxel;
  /// anything further out is background.
  ClampHalfVoxel,
  /// Every off-lattice corner is background (zero padding).
  Zero,
};

/// Trilinear interpolation at a continuous index. `weight`, when given,
/// receives the summed weight of on-lattice corners (1 inside, 0 far outside).
template <typename T>
double sample_trilinear(const Volume<T>& grid, const Vec3& at, EdgePolicy policy = EdgePolicy::Zero,
                        double* weight = nullptr) {
  const auto& d = grid.dims();
  Vec3 p = at;
  if (policy == EdgePolicy::ClampHalfVoxel) {
    for (int a = 0; a < 3; ++a) {
      const double hi = double(d[a]) - 0.5;
      if (p[a] < -0.5 || p[a] > hi) {
        if (weight) *weight = 0.0;
        return 0.0;
      }
      p[a] = std::clamp(p[a], 0.0, double(d[a] - 1));
    }
  }
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto x0 = static_cast<std::int64_t>(fx), y0 = static_cast<std::int64_t>(fy),
             z0 = static_cast<std::int64_t>(fz);
  const double tx = p.x() - fx, ty = p.y() - fy, tz = p.z() - fz;
  double value = 0.0, wsum = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? tz : 1.0 - tz;
    if (wz == 0.0) continue;
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? ty : 1.0 - ty;
      if (wy == 0.0) continue;
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? tx : 1.0 - tx;
        if (wx == 0.0) continue;
        const std::int64_t x = x0 + dx, y = y0 + dy, z = z0 + dz;
        if (!grid.contains(x, y, z)) continue;
        const double w = wx * wy * wz;
        value += w * static_cast<double>(grid(x, y, z));
        wsum += w;
      }
    }
  }
  if (weight) *weight = wsum;
  return value;
}

/// Nearest-voxel lookup; positions more than half a voxel off the lattice
/// read as `outside`.
template <typename T>
T sample_nearest(const Volume<T>& grid, const Vec3& at, T outside = T{}) {
  std::int64_t idx[3];
  for (int a = 0; a < 3; ++a) {
    const double r = std::floor(at[a] + 0.5);
    if (r < 0.0 || r >= double(grid.dims()[a])) {
      // Allow the exact upper half-voxel border, which floor(x + 0.5) rounds out.
      if (at[a] <= double(grid.dims()[a]) - 0.5 && r == double(grid.dims()[a])) {
        idx[a] = grid.dims()[a] - 1;
        continue;
      }
      return outside;
    }
    idx[a] = static_cast<std::int64_t>(r);
  }
  return grid(idx[0], idx[1], idx[2]);
}

template <typename T>
struct Resampled {
  Volume<T> grid;
  /// Source spacing ratio exceeded kMaxAnisotropy.
  bool anisotropy_warning = false;
};

/// Resamples onto `target_spacing`, keeping the physical box (edge to edge)
/// of the source: dims become round(n * s / s') and the new lattice is
/// centred in the old box. Label volumes (integral `T`) must use nearest.
template <typename T>
Resampled<T> resample(const Volume<T>& grid, const Vec3& target_spacing, Interpolation mode) {
  if (!(target_spacing.array() > 0.0).all() || !target_spacing.allFinite()) {
    throw GeometryError("target spacing must be positive");
  }
  if constexpr (std::is_integral_v<T>) {
    if (mode != Interpolation::Nearest) {
      throw std::invalid_argument("integral (label) volumes must be resampled with nearest interpolation");
    }
  }
  Dims dims{};
  Vec3 scale;  // target voxel size in source voxels
  Vec3 shift;  // source continuous index of target voxel 0
  for (int a = 0; a < 3; ++a) {
    const double physical = double(grid.dims()[a]) * grid.spacing()[a];
    dims[a] = std::max<std::int64_t>(1, std::llround(physical / target_spacing[a]));
    scale[a] = target_spacing[a] / grid.spacing()[a];
    shift[a] = 0.5 * scale[a] - 0.5;
  }
  Vec3 origin = grid.origin();
  for (int a = 0; a < 3; ++a) origin += grid.direction().col(a) * (shift[a] * grid.spacing()[a]);

  Resampled<T> out{Volume<T>(dims, target_spacing, origin, grid.direction()),
                   anisotropy_ratio(grid.spacing()) > kMaxAnisotropy};
  Volume<T>& dst = out.grid;
  for (std::int64_t k = 0; k < dims[2]; ++k)
    for (std::int64_t j = 0; j < dims[1]; ++j)
      for (std::int64_t i = 0; i < dims[0]; ++i) {
        // Identity scale maps target voxel i exactly onto source voxel i.
        const Vec3 at(scale.x() == 1.0 ? double(i) : double(i) * scale.x() + shift.x(),
                      scale.y() == 1.0 ? double(j) : double(j) * scale.y() + shift.y(),
                      scale.z() == 1.0 ? double(k) : double(k) * scale.z() + shift.z());
        if (mode == Interpolation::Nearest) {
          dst(i, j, k) = sample_nearest(grid, at);
        } else {
          const double v = sample_trilinear(grid, at, EdgePolicy::ClampHalfVoxel);
          if constexpr (std::is_integral_v<T>) dst(i, j, k) = static_cast<T>(std::llround(v));
          else dst(i, j, k) = static_cast<T>(v);
        }
      }
  return out;
}

}  // namespace xr23d
