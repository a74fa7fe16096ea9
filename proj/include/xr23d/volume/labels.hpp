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
#include <map>
#include <type_traits>

#include "xr23d/volume/volume.hpp"

namespace xr23d {

struct ExtractedLabel {
  BinaryMask mask;
  /// No voxel carried the requested label.
  bool absent = false;
};

template <typename T>
ExtractedLabel extract_label(const Volume<T>& grid, std::int64_t label_id) {
  static_assert(std::is_integral_v<T>, "extract_label needs an integer label volume");
  ExtractedLabel out{grid.template like<std::uint8_t>(), true};
  auto src = grid.data();
  auto dst = out.mask.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (static_cast<std::int64_t>(src[i]) == label_id) {
      dst[i] = 1;
      out.absent = false;
    }
  }
  return out;
}

/// Voxel count of every label present, including 0.
template <typename T>
std::map<std::int64_t, std::size_t> label_histogram(const Volume<T>& grid) {
  static_assert(std::is_integral_v<T>);
  std::map<std::int64_t, std::size_t> hist;
  for (const T& v : grid.data()) ++hist[static_cast<std::int64_t>(v)];
  return hist;
}

}  // namespace xr23d
