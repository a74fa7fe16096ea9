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

#include "xr23d/core/random.hpp"
#include "xr23d/morphometry/femur.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d::phantom {

enum class Side { Right, Left };

struct FemurPhantomSpec {
  double nsa_deg = 130.0;
  double head_radius_mm = 24.0;
  double shaft_radius_mm = 14.0;
  double neck_length_mm = 50.0;
  /// Neck radius at its waist and at both ends; the waist sits mid-neck.
  double neck_waist_radius_mm = 11.0;
  double neck_end_radius_mm = 15.0;
  Side side = Side::Right;
  std::int64_t size = 128;
  double spacing_mm = 1.0;
  /// Half-width of the uniform jitter added to each voxel's inside test.
  double noise_mm = 0.0;
  std::uint64_t seed = 0;
  /// Rigid rotation about the lattice centre applied to the whole bone.
  Mat3 rotation = Mat3::Identity();
};

struct FemurPhantom {
  BinaryMask mask;
  morph::FemurMorphometry truth;
  morph::FemurLocalization localization;
};

namespace detail {

inline double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b, double* t_out = nullptr) {
  const Vec3 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  if (t_out) *t_out = t;
  return (p - (a + t * ab)).norm();
}

}  // namespace detail

/// Proximal femur: a capped shaft cylinder along +z, a neck with a waist
/// leaving the shaft axis medially at the requested neck-shaft angle, and a
/// spherical head at the end of the neck. Coordinates are world mm with the
/// lattice origin at zero.
inline FemurPhantom make_femur_phantom(const FemurPhantomSpec& spec = {}) {
  const double s = spec.spacing_mm;
  const double extent = double(spec.size) * s;
  const Vec3 centre = Vec3::Constant((double(spec.size) - 1) / 2 * s);
  const double mirror = spec.side == Side::Right ? 1.0 : -1.0;
  // Layout fractions keep the 128 mm default inside the lattice.
  const double shaft_x = centre.x() + mirror * 0.125 * extent;
  const double shaft_y = centre.y();
  const Vec3 neck_base(shaft_x, shaft_y, 0.47 * extent);
  const double theta = (180.0 - spec.nsa_deg) * M_PI / 180.0;
  // Medial is towards the patient's left (-x) for a right femur.
  const Vec3 neck_dir(-mirror * std::sin(theta), 0.0, std::cos(theta));
  const Vec3 head = neck_base + spec.neck_length_mm * neck_dir;
  const Vec3 shaft_lo(shaft_x, shaft_y, -spec.shaft_radius_mm);
  const Vec3 shaft_hi(shaft_x, shaft_y, neck_base.z() + 15.0);

  auto sdf = [&](const Vec3& p) {
    double d = detail::segment_distance(p, shaft_lo, shaft_hi) - spec.shaft_radius_mm;
    double t = 0.0;
    const double dn = detail::segment_distance(p, neck_base, head, &t);
    const double u = 2.0 * t - 1.0;
    const double r = spec.neck_waist_radius_mm + (spec.neck_end_radius_mm - spec.neck_waist_radius_mm) * u * u;
    d = std::min(d, dn - r);
    d = std::min(d, (p - head).norm() - spec.head_radius_mm);
    return d;
  };

  FemurPhantom out;
  out.mask = BinaryMask(Dims{spec.size, spec.size, spec.size}, Vec3::Constant(s));
  Rng rng(spec.seed);
  const Mat3 rt = spec.rotation.transpose();
  for (std::int64_t z = 0; z < spec.size; ++z)
    for (std::int64_t y = 0; y < spec.size; ++y)
      for (std::int64_t x = 0; x < spec.size; ++x) {
        const Vec3 p = Vec3(double(x), double(y), double(z)) * s;
        const double jitter = spec.noise_mm > 0.0 ? uniform_real(rng, -spec.noise_mm, spec.noise_mm) : 0.0;
        if (sdf(rt * (p - centre) + centre) <= jitter) out.mask(x, y, z) = 1;
      }

  auto place = [&](const Vec3& p) -> Vec3 { return spec.rotation * (p - centre) + centre; };
  auto& t = out.truth;
  t.fhr = spec.head_radius_mm;
  t.fhc = place(head);
  t.fna = spec.rotation * neck_dir;
  t.fda = spec.rotation * Vec3::UnitZ();
  t.nsa = spec.nsa_deg;
  t.flags.fhr = t.flags.fhc = t.flags.fna = t.flags.fda = t.flags.nsa = true;

  auto& l = out.localization;
  l.axis_point_a_mm = place(Vec3(shaft_x, shaft_y, 0.08 * extent));
  l.axis_point_b_mm = place(Vec3(shaft_x, shaft_y, 0.35 * extent));
  l.isthmus_centre_mm = place(neck_base + 0.5 * spec.neck_length_mm * neck_dir);
  return out;
}

/// A ball alone: no neck, no shaft.
inline BinaryMask make_ball(std::int64_t size, double radius_mm, double spacing_mm = 1.0) {
  BinaryMask m(Dims{size, size, size}, Vec3::Constant(spacing_mm));
  const Vec3 c = Vec3::Constant((double(size) - 1) / 2 * spacing_mm);
  for (std::int64_t z = 0; z < size; ++z)
    for (std::int64_t y = 0; y < size; ++y)
      for (std::int64_t x = 0; x < size; ++x)
        if ((Vec3(double(x), double(y), double(z)) * spacing_mm - c).norm() <= radius_mm) m(x, y, z) = 1;
  return m;
}

}  // namespace xr23d::phantom
