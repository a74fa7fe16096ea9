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
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "xr23d/volume/volume.hpp"

namespace xr23d {

enum class Connectivity { Face6 = 6, Full26 = 26 };

inline std::vector<std::array<int, 3>> neighbour_offsets(Connectivity connectivity) {
  std::vector<std::array<int, 3>> offsets;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (connectivity == Connectivity::Face6 && manhattan != 1) continue;
        offsets.push_back({dx, dy, dz});
      }
  return offsets;
}

struct Component {
  std::size_t size = 0;
  /// Lexicographically smallest (x, y, z) voxel of the component.
  std::array<std::int64_t, 3> min_index{};
};

struct ComponentLabels {
  /// 0 = background, c + 1 = components[c].
  Volume<std::int32_t> labels;
  std::vector<Component> components;
};

template <typename T>
ComponentLabels label_components(const Volume<T>& mask, Connectivity connectivity = Connectivity::Face6) {
  ComponentLabels out{mask.template like<std::int32_t>(), {}};
  const auto offsets = neighbour_offsets(connectivity);
  const auto& d = mask.dims();
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (mask[seed] == T{0} || out.labels[seed] != 0) continue;
    const auto label = static_cast<std::int32_t>(out.components.size() + 1);
    Component comp;
    comp.min_index = mask.coords(seed);
    out.labels[seed] = label;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const auto c = mask.coords(cur);
      ++comp.size;
      if (c < comp.min_index) comp.min_index = c;
      for (const auto& o : offsets) {
        const std::int64_t x = c[0] + o[0], y = c[1] + o[1], z = c[2] + o[2];
        if (x < 0 || y < 0 || z < 0 || x >= d[0] || y >= d[1] || z >= d[2]) continue;
        const std::size_t n = mask.index(x, y, z);
        if (mask[n] != T{0} && out.labels[n] == 0) {
          out.labels[n] = label;
          stack.push_back(n);
        }
      }
    }
    out.components.push_back(comp);
  }
  return out;
}

/// Index into `components` of the largest one; ties go to the component whose
/// smallest (x, y, z) voxel is lexicographically first. -1 when empty.
inline std::ptrdiff_t largest_component_index(const std::vector<Component>& components) {
  std::ptrdiff_t best = -1;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (best < 0) {
      best = static_cast<std::ptrdiff_t>(i);
      continue;
    }
    const auto& b = components[static_cast<std::size_t>(best)];
    const auto& c = components[i];
    if (c.size > b.size || (c.size == b.size && c.min_index < b.min_index)) best = static_cast<std::ptrdiff_t>(i);
  }
  return best;
}

/// Keeps only the largest connected component; an empty mask stays empty.
template <typename T>
BinaryMask largest_component(const Volume<T>& mask, Connectivity connectivity = Connectivity::Face6) {
  const ComponentLabels cl = label_components(mask, connectivity);
  BinaryMask out = mask.template like<std::uint8_t>();
  const std::ptrdiff_t best = largest_component_index(cl.components);
  if (best < 0) return out;
  const auto keep = static_cast<std::int32_t>(best + 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cl.labels[i] == keep ? 1 : 0;
  return out;
}

inline Connectivity connectivity_from_int(int n) {
  if (n == 6) return Connectivity::Face6;
  if (n == 26) return Connectivity::Full26;
  throw std::invalid_argument("connectivity must be 6 or 26");
}

}  // namespace xr23d
