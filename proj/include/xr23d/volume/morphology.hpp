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
#include <vector>

#include "xr23d/volume/crop.hpp"
#include "xr23d/volume/distance_transform.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d {

// Ball-shaped structuring elements are measured in voxels (index space), so
// results do not depend on the physical spacing.

template <typename T>
BinaryMask dilate_ball(const Volume<T>& mask, double radius_voxels, unsigned threads = 1) {
  const DistanceField field = euclidean_feature_transform(mask, Vec3::Ones(), threads);
  BinaryMask out = mask.template like<std::uint8_t>();
  if (!field.has_sites()) return out;
  const double r2 = radius_voxels * radius_voxels;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = field.squared_distance(i) <= r2 ? 1 : 0;
  return out;
}

/// Erosion treats everything beyond the lattice as background.
template <typename T>
BinaryMask erode_ball(const Volume<T>& mask, double radius_voxels, unsigned threads = 1) {
  const auto r = static_cast<std::int64_t>(std::ceil(radius_voxels)) + 1;
  const Dims& d = mask.dims();
  Volume<std::uint8_t> padded_background(Dims{d[0] + 2 * r, d[1] + 2 * r, d[2] + 2 * r}, mask.spacing(), Vec3::Zero(),
                                         Mat3::Identity(), std::uint8_t{1});
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x)
        padded_background(x + r, y + r, z + r) = mask(x, y, z) != T{0} ? 0 : 1;
  const BinaryMask grown = dilate_ball(padded_background, radius_voxels, threads);
  BinaryMask out = mask.template like<std::uint8_t>();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) out(x, y, z) = grown(x + r, y + r, z + r) ? 0 : 1;
  return out;
}

/// Closing (dilate then erode) computed on a padded copy so the lattice edge
/// does not clip the dilation.
template <typename T>
BinaryMask close_ball(const Volume<T>& mask, double radius_voxels, unsigned threads = 1) {
  const auto r = static_cast<std::int64_t>(std::ceil(radius_voxels)) + 1;
  const Dims& d = mask.dims();
  BinaryMask padded(Dims{d[0] + 2 * r, d[1] + 2 * r, d[2] + 2 * r}, mask.spacing());
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) padded(x + r, y + r, z + r) = mask(x, y, z) != T{0} ? 1 : 0;
  const BinaryMask closed = erode_ball(dilate_ball(padded, radius_voxels, threads), radius_voxels, threads);
  BinaryMask out = mask.template like<std::uint8_t>();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) out(x, y, z) = closed(x + r, y + r, z + r);
  return out;
}

/// Per axial (z) slice, background pixels not 4-connected to the slice border.
template <typename T>
BinaryMask axial_holes(const Volume<T>& mask) {
  const Dims& d = mask.dims();
  BinaryMask holes = mask.template like<std::uint8_t>();
  std::vector<std::uint8_t> outside(static_cast<std::size_t>(d[0] * d[1]));
  std::vector<std::int64_t> stack;
  for (std::int64_t z = 0; z < d[2]; ++z) {
    std::fill(outside.begin(), outside.end(), 0);
    stack.clear();
    auto visit = [&](std::int64_t x, std::int64_t y) {
      if (x < 0 || y < 0 || x >= d[0] || y >= d[1]) return;
      const std::int64_t i = x + d[0] * y;
      if (outside[i] || mask(x, y, z) != T{0}) return;
      outside[i] = 1;
      stack.push_back(i);
    };
    for (std::int64_t x = 0; x < d[0]; ++x) {
      visit(x, 0);
      visit(x, d[1] - 1);
    }
    for (std::int64_t y = 0; y < d[1]; ++y) {
      visit(0, y);
      visit(d[0] - 1, y);
    }
    while (!stack.empty()) {
      const std::int64_t i = stack.back();
      stack.pop_back();
      const std::int64_t x = i % d[0], y = i / d[0];
      visit(x + 1, y);
      visit(x - 1, y);
      visit(x, y + 1);
      visit(x, y - 1);
    }
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x)
        if (mask(x, y, z) == T{0} && !outside[x + d[0] * y]) holes(x, y, z) = 1;
  }
  return holes;
}

}  // namespace xr23d
