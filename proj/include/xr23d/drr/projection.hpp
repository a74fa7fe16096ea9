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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xr23d/core/error.hpp"
#include "xr23d/core/parallel.hpp"
#include "xr23d/volume/resample.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d::drr {

enum class View { AP, LAT };
enum class IntensityMode { Mean, Sum };

inline std::string_view to_string(View v) { return v == View::AP ? "AP" : "LAT"; }
inline std::string_view to_string(IntensityMode m) { return m == IntensityMode::Mean ? "mean" : "sum"; }

inline IntensityMode intensity_mode_from_string(std::string_view s) {
  if (s == "mean") return IntensityMode::Mean;
  if (s == "sum") return IntensityMode::Sum;
  throw ConfigError("intensity mode must be mean or sum, got '" + std::string(s) + "'");
}

inline const std::vector<double>& default_misalignment_angles() {
  static const std::vector<double> angles{92.0, 94.0, 96.0, 98.0, 100.0};
  return angles;
}

struct ProjectionSpec {
  View view = View::AP;
  double lat_angle_deg = 90.0;
  /// (rows, cols); empty keeps one pixel per voxel over the default field of view.
  std::optional<std::pair<std::int64_t, std::int64_t>> output_size;
  IntensityMode intensity = IntensityMode::Mean;
  double hu_lo = -1000.0;
  double hu_hi = 2000.0;

  void validate() const {
    if (!(lat_angle_deg > 0.0 && lat_angle_deg < 180.0))
      throw ConfigError("lat_angle_deg must lie in (0, 180)");
    if (output_size && (output_size->first <= 0 || output_size->second <= 0))
      throw ConfigError("output size must be positive");
    if (!(hu_lo < hu_hi)) throw ConfigError("HU window requires lo < hi");
  }

  /// Rotation of the ray frame about the superior axis.
  double angle_deg() const { return view == View::AP ? 0.0 : lat_angle_deg; }
};

/// Row-major image, row 0 at the superior edge, column 0 at the patient's right.
struct DrrImage {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> pixels;
  double row_spacing = 1.0;
  double col_spacing = 1.0;
  ProjectionSpec spec;

  double& at(std::int64_t r, std::int64_t c) { return pixels[std::size_t(r * cols + c)]; }
  double at(std::int64_t r, std::int64_t c) const { return pixels[std::size_t(r * cols + c)]; }
};

namespace detail {

/// cos/sin with exact values on multiples of 90 degrees.
inline std::pair<double, double> cos_sin_deg(double deg) {
  const double q = deg / 90.0;
  if (q == std::round(q)) {
    switch (((static_cast<long long>(std::round(q)) % 4) + 4) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  const double r = deg * M_PI / 180.0;
  return {std::cos(r), std::sin(r)};
}

/// Smallest n >= min_n with n - base even, so centred samples hit voxel centres.
inline std::int64_t matched_parity(double min_n, std::int64_t base) {
  const double extra = std::max(0.0, min_n - double(base));
  return base + 2 * static_cast<std::int64_t>(std::ceil(extra / 2.0 - 1e-9));
}

}  // namespace detail

/// Sampling layout of the image plane and rays, shared by AP and every LAT angle.
struct ProjectionLayout {
  std::int64_t rows, cols, steps;
  double row_spacing, col_spacing, step;
};

inline ProjectionLayout projection_layout(const VoxelGrid& ct, const ProjectionSpec& spec) {
  const auto& n = ct.dims();
  const Vec3& s = ct.spacing();
  ProjectionLayout l{};
  const double lateral_mm = std::max(double(n[0]) * s.x(), double(n[1]) * s.y());
  const std::int64_t base_cols = detail::matched_parity(lateral_mm / s.x(), n[0]);
  const std::int64_t base_rows = n[2];
  l.step = std::min(s.x(), s.y());
  const double chord = std::hypot(double(n[0]) * s.x(), double(n[1]) * s.y()) / l.step;
  l.steps = detail::matched_parity(chord, std::int64_t(std::llround(double(n[1]) * s.y() / l.step)));
  if (spec.output_size) {
    l.rows = spec.output_size->first;
    l.cols = spec.output_size->second;
    l.row_spacing = double(base_rows) * s.z() / double(l.rows);
    l.col_spacing = double(base_cols) * s.x() / double(l.cols);
  } else {
    l.rows = base_rows;
    l.cols = base_cols;
    l.row_spacing = s.z();
    l.col_spacing = s.x();
  }
  return l;
}

inline double attenuation(double hu, double lo, double hi) {
  return (std::clamp(hu, lo, hi) - lo) / (hi - lo);
}

/// Unnormalised line integrals (sum mode) or integrals divided by the common
/// ray length (mean mode). Every ray spans the same length, so the mean never
/// depends on how much of a ray falls inside the lattice.
inline DrrImage project_raw(const VoxelGrid& ct, const ProjectionSpec& spec, unsigned threads = 1) {
  spec.validate();
  const auto layout = projection_layout(ct, spec);
  const auto& n = ct.dims();
  const Vec3& s = ct.spacing();

  VoxelGrid mu = ct.like<float>();
  for (std::size_t i = 0; i < mu.size(); ++i)
    mu[i] = static_cast<float>(attenuation(ct[i], spec.hu_lo, spec.hu_hi));

  const auto [c, sn] = detail::cos_sin_deg(spec.angle_deg());
  const Vec3 centre((double(n[0]) - 1) / 2, (double(n[1]) - 1) / 2, (double(n[2]) - 1) / 2);
  DrrImage img;
  img.rows = layout.rows;
  img.cols = layout.cols;
  img.row_spacing = layout.row_spacing;
  img.col_spacing = layout.col_spacing;
  img.spec = spec;
  img.pixels.assign(std::size_t(img.rows * img.cols), 0.0);

  parallel_for(std::size_t(layout.rows), threads, [&](std::size_t r) {
    const double z_mm = ((double(layout.rows) - 1) / 2 - double(r)) * layout.row_spacing;
    const double iz = centre.z() + z_mm / s.z();
    for (std::int64_t col = 0; col < layout.cols; ++col) {
      const std::int64_t iu = layout.cols - 1 - col;
      const double u_mm = (double(iu) - (double(layout.cols) - 1) / 2) * layout.col_spacing;
      double total = 0.0;
      for (std::int64_t t = 0; t < layout.steps; ++t) {
        const double t_mm = (double(t) - (double(layout.steps) - 1) / 2) * layout.step;
        // Ray frame: e_u = (cos, sin, 0), direction d = (-sin, cos, 0).
        const double x_mm = u_mm * c - t_mm * sn;
        const double y_mm = u_mm * sn + t_mm * c;
        total += sample_trilinear(mu, Vec3(centre.x() + x_mm / s.x(), centre.y() + y_mm / s.y(), iz),
                                  EdgePolicy::Zero);
      }
      img.at(std::int64_t(r), col) =
          spec.intensity == IntensityMode::Sum ? total * layout.step : total / double(layout.steps);
    }
  });
  return img;
}

/// Min-max normalisation to [0,1]; a constant image becomes all zeros.
inline void normalize(DrrImage& img) {
  if (img.pixels.empty()) return;
  const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double a = *lo, b = *hi;
  if (!(b > a)) {
    std::fill(img.pixels.begin(), img.pixels.end(), 0.0);
    return;
  }
  for (double& p : img.pixels) p = std::clamp((p - a) / (b - a), 0.0, 1.0);
}

inline DrrImage project(const VoxelGrid& ct, const ProjectionSpec& spec, unsigned threads = 1) {
  DrrImage img = project_raw(ct, spec, threads);
  normalize(img);
  return img;
}

struct BiplanarPair {
  double lat_angle_deg = 90.0;
  DrrImage ap;
  DrrImage lat;
};

inline BiplanarPair make_biplanar(const VoxelGrid& ct, double lat_angle_deg, ProjectionSpec base = {},
                                  unsigned threads = 1) {
  base.lat_angle_deg = lat_angle_deg;
  base.view = View::AP;
  BiplanarPair pair;
  pair.lat_angle_deg = lat_angle_deg;
  pair.ap = project(ct, base, threads);
  base.view = View::LAT;
  pair.lat = project(ct, base, threads);
  return pair;
}

inline std::vector<BiplanarPair> misalignment_series(const VoxelGrid& ct, const std::vector<double>& angles,
                                                     const ProjectionSpec& base = {}, unsigned threads = 1) {
  if (angles.empty()) throw ConfigError("misalignment series needs at least one angle");
  std::vector<BiplanarPair> out;
  out.reserve(angles.size());
  for (double a : angles) out.push_back(make_biplanar(ct, a, base, threads));
  return out;
}

}  // namespace xr23d::drr
