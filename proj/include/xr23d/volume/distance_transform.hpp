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
#include <limits>
#include <vector>

#include "xr23d/core/parallel.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d {

/// Exact Euclidean feature transform: for every voxel, the nearest nonzero
/// "site" voxel of the input under anisotropic spacing.
struct DistanceField {
  Dims dims{};
  Vec3 spacing = Vec3::Ones();
  /// Linear index of the nearest site, -1 when there is no site at all.
  std::vector<std::int64_t> nearest;

  bool has_sites() const { return !nearest.empty() && nearest.front() >= 0; }

  /// Squared distance in mm² from voxel `linear` to its nearest site,
  /// recomputed from the integer offset so every voxel reports the same value
  /// a direct pairwise evaluation would.
  double squared_distance(std::size_t linear) const {
    const std::int64_t site = nearest[linear];
    if (site < 0) return std::numeric_limits<double>::infinity();
    return squared_offset_mm(static_cast<std::int64_t>(linear), site);
  }
  double distance(std::size_t linear) const { return std::sqrt(squared_distance(linear)); }

  double squared_offset_mm(std::int64_t a, std::int64_t b) const {
    const std::int64_t nx = dims[0], nxy = dims[0] * dims[1];
    const double dx = double(a % nx - b % nx) * spacing.x();
    const double dy = double((a / nx) % dims[1] - (b / nx) % dims[1]) * spacing.y();
    const double dz = double(a / nxy - b / nxy) * spacing.z();
    return dx * dx + dy * dy + dz * dz;
  }
};

namespace detail {

// One separable pass of the lower-envelope-of-parabolas algorithm
// (Felzenszwalb & Huttenlocher) along a single lattice line.
struct EnvelopeScratch {
  std::vector<std::int64_t> v;
  std::vector<double> z;
  std::vector<double> f;
  std::vector<std::int64_t> feat;
};

inline void envelope_pass(std::int64_t n, double s, double* values, std::int64_t* features, std::int64_t stride,
                          EnvelopeScratch& w) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  w.v.resize(static_cast<std::size_t>(n));
  w.z.resize(static_cast<std::size_t>(n) + 1);
  w.f.resize(static_cast<std::size_t>(n));
  w.feat.resize(static_cast<std::size_t>(n));
  for (std::int64_t q = 0; q < n; ++q) {
    w.f[q] = values[q * stride];
    w.feat[q] = features[q * stride];
  }
  const double s2 = s * s;
  std::int64_t k = -1;
  for (std::int64_t q = 0; q < n; ++q) {
    if (w.f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      w.v[0] = q;
      w.z[0] = -kInf;
      w.z[1] = kInf;
      continue;
    }
    double cut = 0.0;
    // z[0] is -inf, so the envelope never empties.
    while (true) {
      const std::int64_t p = w.v[k];
      cut = ((w.f[q] + s2 * double(q) * double(q)) - (w.f[p] + s2 * double(p) * double(p))) /
            (2.0 * s2 * double(q - p));
      if (cut > w.z[k]) break;
      --k;
    }
    ++k;
    w.v[k] = q;
    w.z[k] = cut;
    w.z[k + 1] = kInf;
  }
  if (k < 0) return;  // no sites on this line; leave it at +inf
  std::int64_t j = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    while (w.z[j + 1] < double(q)) ++j;
    const std::int64_t p = w.v[j];
    const double off = double(q - p) * s;
    values[q * stride] = off * off + w.f[p];
    features[q * stride] = w.feat[p];
  }
}

}  // namespace detail

/// Feature transform of the nonzero voxels of `sites`, with distances
/// measured in mm using `spacing` (defaults to the volume's spacing).
template <typename T>
DistanceField euclidean_feature_transform(const Volume<T>& sites, const Vec3& spacing, unsigned threads = 1) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  DistanceField field;
  field.dims = sites.dims();
  field.spacing = spacing;
  const std::size_t n = sites.size();
  std::vector<double> values(n, kInf);
  field.nearest.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (sites[i] != T{0}) {
      values[i] = 0.0;
      field.nearest[i] = static_cast<std::int64_t>(i);
    }
  }
  const auto& d = field.dims;
  const std::int64_t strides[3] = {1, d[0], d[0] * d[1]};
  for (int axis = 0; axis < 3; ++axis) {
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    const std::int64_t lines = d[a1] * d[a2];
    const auto worker_count = std::max(1u, threads);
    std::vector<detail::EnvelopeScratch> scratch(worker_count);
    // Lines are split into one contiguous block per worker.
    const std::int64_t per = (lines + worker_count - 1) / worker_count;
    parallel_for(worker_count, worker_count, [&](std::size_t wkr) {
      const std::int64_t begin = std::int64_t(wkr) * per;
      const std::int64_t end = std::min(lines, begin + per);
      for (std::int64_t line = begin; line < end; ++line) {
        const std::int64_t i1 = line % d[a1], i2 = line / d[a1];
        const std::int64_t start = i1 * strides[a1] + i2 * strides[a2];
        detail::envelope_pass(d[axis], spacing[axis], values.data() + start, field.nearest.data() + start,
                              strides[axis], scratch[wkr]);
      }
    });
  }
  return field;
}

template <typename T>
DistanceField euclidean_feature_transform(const Volume<T>& sites, unsigned threads = 1) {
  return euclidean_feature_transform(sites, sites.spacing(), threads);
}

}  // namespace xr23d
