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

#include <optional>

#include "xr23d/core/error.hpp"
#include "xr23d/ingestion/config.hpp"
#include "xr23d/volume/crop.hpp"
#include "xr23d/volume/resample.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d::ingestion {

/// HU written into padding outside the scanned field of view.
inline constexpr float kAirHu = -1024.0f;

struct PreparedSample {
  VoxelGrid ct;
  BinaryMask mask;
  Vec3 centre_world;
  bool anisotropy_warning = false;
};

/// Resamples CT (trilinear) and mask (nearest) to the target spacing, then
/// crops or pads both to the target dims around `centre_world`, or the mask
/// centroid when no centre is given.
inline PreparedSample prepare_sample(const VoxelGrid& ct, const BinaryMask& mask, const PreparationTarget& target,
                                     std::optional<Vec3> centre_world = std::nullopt) {
  if (!ct.same_geometry(mask)) throw ShapeError("CT and mask geometry differ");
  if (count_foreground(mask) == 0) throw PreparationError("empty mask");
  const Vec3 spacing = Vec3::Constant(target.spacing_mm);
  PreparedSample out;
  out.centre_world = centre_world ? *centre_world : foreground_centroid(mask);
  auto rct = resample(ct, spacing, Interpolation::Trilinear);
  auto rmask = resample(mask, spacing, Interpolation::Nearest);
  out.anisotropy_warning = rct.anisotropy_warning;
  out.ct = crop_or_pad(rct.grid, target.dims, out.centre_world, kAirHu);
  out.mask = crop_or_pad(rmask.grid, target.dims, out.centre_world, std::uint8_t{0});
  if (count_foreground(out.mask) == 0) throw PreparationError("mask vanished after resampling and cropping");
  return out;
}

}  // namespace xr23d::ingestion
