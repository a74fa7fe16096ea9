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
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xr23d/core/error.hpp"
#include "xr23d/morphometry/fitting.hpp"
#include "xr23d/volume/components.hpp"
#include "xr23d/volume/distance_transform.hpp"
#include "xr23d/volume/surface.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d::morph {

/// Manual localisation transferred from the ground truth. Axis points bound
/// the subtrochanteric interval (a distal, b proximal); the optional head and
/// isthmus entries are used when the automatic search cannot run.
struct FemurLocalization {
  Vec3 axis_point_a_mm = Vec3::Zero();
  Vec3 axis_point_b_mm = Vec3::Zero();
  std::optional<Vec3> head_centre_mm;
  std::optional<double> head_radius_mm;
  std::optional<Vec3> isthmus_centre_mm;
};

struct FemurFlags {
  bool fhr = false, fhc = false, fna = false, fda = false, nsa = false;
  bool nsa_implausible = false, fhr_implausible = false;
  /// Neck axis came from the transferred isthmus, not the sweep.
  bool fna_transferred = false;
};

struct FemurMorphometry {
  double fhr = std::numeric_limits<double>::quiet_NaN();
  Vec3 fhc = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  Vec3 fna = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  Vec3 fda = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  double nsa = std::numeric_limits<double>::quiet_NaN();
  FemurFlags flags;
};

inline constexpr double kNsaPlausibleLo = 90.0, kNsaPlausibleHi = 180.0;
inline constexpr double kFhrPlausibleLo = 10.0, kFhrPlausibleHi = 40.0;
inline constexpr std::size_t kMinHeadPoints = 30;
inline constexpr std::size_t kMinShaftSlices = 5;
inline constexpr double kShaftSliceStepMm = 2.0;

/// Neck-shaft angle from unit vectors; fna points towards the head, fda distal to proximal.
inline double neck_shaft_angle(const Vec3& fna, const Vec3& fda) { return 180.0 - angle_deg(fna, fda); }

namespace detail {

inline std::vector<Vec3> foreground_points(const BinaryMask& m) {
  std::vector<Vec3> pts;
  const auto& d = m.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x)
        if (m(x, y, z)) pts.push_back(m.index_to_world(x, y, z));
  return pts;
}

/// Deepest interior voxel (largest distance to background); ties keep the lowest index.
inline std::optional<Sphere> deepest_point(const BinaryMask& m) {
  BinaryMask background = m.like<std::uint8_t>();
  for (std::size_t i = 0; i < m.size(); ++i) background[i] = m[i] ? 0 : 1;
  const auto field = euclidean_feature_transform(background, m.spacing());
  if (!field.has_sites()) return std::nullopt;
  double best = -1.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] && field.squared_distance(i) > best) best = field.squared_distance(i), arg = i;
  if (best < 0.0) return std::nullopt;
  const auto c = m.coords(arg);
  return Sphere{m.index_to_world(c[0], c[1], c[2]), std::sqrt(best)};
}

}  // namespace detail

/// Femoral head sphere from the surface of `mask`. Starting from `seed` (the
/// deepest interior point when absent), surface points within a shell of a
/// quarter radius are refitted three times, then one trimmed fit is taken.
inline std::optional<TrimmedSphere> fit_femoral_head(const BinaryMask& mask, std::optional<Sphere> seed = {}) {
  if (!seed) seed = detail::deepest_point(mask);
  if (!seed || !(seed->radius > 0.0)) return std::nullopt;
  std::vector<Vec3> surface;
  for (const auto& f : surface_faces(mask)) surface.push_back(f.point);
  Sphere s = *seed;
  std::vector<Vec3> shell;
  auto select = [&](const Sphere& sp) {
    shell.clear();
    for (const auto& p : surface)
      if (std::abs((p - sp.centre).norm() - sp.radius) <= 0.25 * sp.radius) shell.push_back(p);
  };
  for (int it = 0; it < 3; ++it) {
    select(s);
    if (shell.size() < kMinHeadPoints) return std::nullopt;
    const auto f = fit_sphere(shell);
    if (!f) return std::nullopt;
    s = *f;
  }
  select(s);
  if (shell.size() < kMinHeadPoints) return std::nullopt;
  auto trimmed = fit_sphere_trimmed(shell);
  if (!trimmed || trimmed->inliers < kMinHeadPoints) return std::nullopt;
  return trimmed;
}

/// Diaphysis axis from circle fits on 2 mm slices of the subtrochanteric
/// interval, oriented distal to proximal. Returns the line through the circle
/// centres.
inline std::optional<Line> estimate_diaphysis_axis(const BinaryMask& mask, const FemurLocalization& loc) {
  const Vec3 ab = loc.axis_point_b_mm - loc.axis_point_a_mm;
  const double length = ab.norm();
  if (!(length > 0.0)) return std::nullopt;
  const Vec3 u = ab / length;
  auto in_interval = [&](const Vec3& p) {
    const double s = (p - loc.axis_point_a_mm).dot(u);
    return s >= 0.0 && s <= length;
  };
  std::vector<Vec3> slab;
  for (const auto& p : detail::foreground_points(mask))
    if (in_interval(p)) slab.push_back(p);
  if (slab.size() < 10) return std::nullopt;
  const auto pc = principal_axes(slab);
  Vec3 v = pc.axes.col(2);
  if (std::abs(v.dot(u)) < 0.5) v = u;
  if (v.dot(u) < 0) v = -v;
  const auto [e1, e2] = orthonormal_basis(v);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : slab) {
    const double s = (p - pc.mean).dot(v);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const auto faces = surface_faces(mask);
  std::vector<Vec3> centres;
  for (double s = lo + kShaftSliceStepMm / 2; s <= hi - kShaftSliceStepMm / 2 + 1e-9; s += kShaftSliceStepMm) {
    std::vector<Vec2> ring;
    for (const auto& f : faces) {
      if (std::abs(f.normal.dot(v)) > 0.75 || !in_interval(f.point)) continue;
      const Vec3 q = f.point - pc.mean;
      if (std::abs(q.dot(v) - s) > kShaftSliceStepMm / 2) continue;
      ring.emplace_back(q.dot(e1), q.dot(e2));
    }
    if (ring.size() < 8) continue;
    const auto c = fit_circle(ring);
    if (!c) continue;
    centres.push_back(pc.mean + s * v + c->centre.x() * e1 + c->centre.y() * e2);
  }
  if (centres.size() < kMinShaftSlices) return std::nullopt;
  auto line = fit_line(centres);
  if (!line) return std::nullopt;
  if (line->direction.dot(u) < 0) line->direction = -line->direction;
  return line;
}

struct NeckAxis {
  Vec3 direction;  ///< unit, isthmus towards head centre
  Vec3 isthmus;
};

/// Neck axis by sweeping cross-sections from the head centre towards the
/// shaft. Each section keeps voxels within one head radius of the sweep line;
/// the smallest interior section is the isthmus and its centroid re-aims the
/// sweep until the direction settles. Fails on an empty section or when the
/// smallest section sits at either end of the sweep.
inline std::optional<NeckAxis> estimate_neck_axis(const BinaryMask& mask, const Vec3& fhc, double fhr,
                                                  const std::optional<Line>& shaft = std::nullopt) {
  if (!(fhr > 0.0)) return std::nullopt;
  const double reach = 4.0 * fhr;
  std::vector<Vec3> rel;
  for (const auto& p : detail::foreground_points(mask)) {
    const Vec3 q = p - fhc;
    if (q.norm() <= reach + fhr) rel.push_back(q);
  }
  // Initial aim: centroid of the foreground in the shell just outside the head.
  Vec3 shell_sum = Vec3::Zero();
  std::size_t shell_n = 0;
  for (const auto& q : rel) {
    const double r = q.norm();
    if (r >= 1.1 * fhr && r <= 1.6 * fhr) shell_sum += q, ++shell_n;
  }
  if (shell_n == 0) return std::nullopt;
  Vec3 w = shell_sum.normalized();

  const double h = mask.spacing().maxCoeff();
  const double start = 0.5 * fhr;
  std::optional<NeckAxis> result;
  for (int it = 0; it < 20; ++it) {
    double end = 2.5 * fhr;
    if (shaft) {
      // Closest approach of the sweep line to the shaft axis, plus a margin.
      const Vec3 d = shaft->direction, r0 = fhc - shaft->point;
      const double b = w.dot(d), denom = 1.0 - b * b;
      if (denom > 1e-9) end = std::clamp((b * d.dot(r0) - w.dot(r0)) / denom, fhr, reach) + 0.25 * fhr;
    }
    const auto bins = static_cast<std::size_t>(std::floor((end - start) / h)) + 1;
    if (bins < 3) return std::nullopt;
    std::vector<std::size_t> count(bins, 0);
    std::vector<Vec3> sum(bins, Vec3::Zero());
    for (const auto& q : rel) {
      const double t = q.dot(w);
      const double k = std::floor((t - start) / h + 0.5);
      if (k < 0.0 || k >= double(bins)) continue;
      if ((q - t * w).norm() > fhr) continue;
      count[std::size_t(k)]++;
      sum[std::size_t(k)] += q;
    }
    std::size_t arg = 0;
    for (std::size_t k = 0; k < bins; ++k) {
      if (count[k] == 0) return std::nullopt;
      if (count[k] < count[arg]) arg = k;
    }
    if (arg == 0 || arg == bins - 1) return std::nullopt;
    const Vec3 isthmus = sum[arg] / double(count[arg]);
    const Vec3 next = isthmus.normalized();
    const bool settled = angle_deg(next, w) < 1e-3;
    w = next;
    result = NeckAxis{-w, fhc + isthmus};
    if (settled) break;
  }
  return result;
}

/// Full femur morphometry on the largest component of `mask`.
inline FemurMorphometry analyze_femur(const BinaryMask& input, const std::optional<FemurLocalization>& loc = {}) {
  FemurMorphometry out;
  if (count_foreground(input) == 0) return out;
  const BinaryMask mask = largest_component(input);

  std::optional<Sphere> seed;
  if (loc && loc->head_centre_mm && loc->head_radius_mm) seed = Sphere{*loc->head_centre_mm, *loc->head_radius_mm};
  if (const auto head = fit_femoral_head(mask, seed)) {
    out.fhr = head->sphere.radius;
    out.fhc = head->sphere.centre;
    out.flags.fhr = out.flags.fhc = true;
    out.flags.fhr_implausible = out.fhr < kFhrPlausibleLo || out.fhr > kFhrPlausibleHi;
  }
  std::optional<Line> shaft;
  if (loc) shaft = estimate_diaphysis_axis(mask, *loc);
  if (shaft) {
    out.fda = shaft->direction;
    out.flags.fda = true;
  }
  if (out.flags.fhc) {
    if (const auto neck = estimate_neck_axis(mask, out.fhc, out.fhr, shaft)) {
      out.fna = neck->direction;
      out.flags.fna = true;
    } else if (loc && loc->isthmus_centre_mm && (out.fhc - *loc->isthmus_centre_mm).norm() > 0.0) {
      out.fna = (out.fhc - *loc->isthmus_centre_mm).normalized();
      out.flags.fna = out.flags.fna_transferred = true;
    }
  }
  if (out.flags.fna && out.flags.fda) {
    out.nsa = neck_shaft_angle(out.fna, out.fda);
    out.flags.nsa = true;
    out.flags.nsa_implausible = out.nsa < kNsaPlausibleLo || out.nsa >= kNsaPlausibleHi;
  }
  return out;
}

struct FemurErrors {
  double fhr_mm, nsa_deg, fhc_mm, fna_deg, fda_deg;
};

/// Absolute parameter errors; NaN where either side is invalid.
inline FemurErrors femur_errors(const FemurMorphometry& pred, const FemurMorphometry& gt) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  FemurErrors e{nan, nan, nan, nan, nan};
  if (pred.flags.fhr && gt.flags.fhr) e.fhr_mm = std::abs(pred.fhr - gt.fhr);
  if (pred.flags.nsa && gt.flags.nsa) e.nsa_deg = std::abs(pred.nsa - gt.nsa);
  if (pred.flags.fhc && gt.flags.fhc) e.fhc_mm = (pred.fhc - gt.fhc).norm();
  if (pred.flags.fna && gt.flags.fna) e.fna_deg = angle_deg(pred.fna, gt.fna);
  if (pred.flags.fda && gt.flags.fda) e.fda_deg = angle_deg(pred.fda, gt.fda);
  return e;
}

namespace detail {

inline nlohmann::ordered_json vec_json(const Vec3& v, bool valid) {
  if (!valid) return nullptr;
  return {v.x(), v.y(), v.z()};
}

inline nlohmann::ordered_json num_json(double v, bool valid) {
  if (!valid) return nullptr;
  return v;
}

inline Vec3 vec_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw FormatError("expected a 3-vector");
  return {v[0], v[1], v[2]};
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const FemurMorphometry& m) {
  nlohmann::ordered_json j;
  j["fhr_mm"] = detail::num_json(m.fhr, m.flags.fhr);
  j["nsa_deg"] = detail::num_json(m.nsa, m.flags.nsa);
  j["fda_xyz"] = detail::vec_json(m.fda, m.flags.fda);
  j["fna_xyz"] = detail::vec_json(m.fna, m.flags.fna);
  j["fhc_xyz"] = detail::vec_json(m.fhc, m.flags.fhc);
  nlohmann::ordered_json f;
  f["fhr_valid"] = m.flags.fhr;
  f["fhc_valid"] = m.flags.fhc;
  f["fna_valid"] = m.flags.fna;
  f["fda_valid"] = m.flags.fda;
  f["nsa_valid"] = m.flags.nsa;
  f["nsa_implausible"] = m.flags.nsa_implausible;
  f["fhr_implausible"] = m.flags.fhr_implausible;
  f["fna_transferred"] = m.flags.fna_transferred;
  j["flags"] = f;
  return j;
}

/// Sidecar: JSON object sample_id -> {axis_point_a_mm, axis_point_b_mm, [head_centre_mm,
/// head_radius_mm, isthmus_centre_mm]}.
inline std::map<std::string, FemurLocalization> read_localizations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read localisation sidecar: " + path.string());
  std::map<std::string, FemurLocalization> out;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [id, v] : j.items()) {
      FemurLocalization l;
      l.axis_point_a_mm = detail::vec_from_json(v.at("axis_point_a_mm"));
      l.axis_point_b_mm = detail::vec_from_json(v.at("axis_point_b_mm"));
      if (v.contains("head_centre_mm")) l.head_centre_mm = detail::vec_from_json(v.at("head_centre_mm"));
      if (v.contains("head_radius_mm")) l.head_radius_mm = v.at("head_radius_mm").get<double>();
      if (v.contains("isthmus_centre_mm")) l.isthmus_centre_mm = detail::vec_from_json(v.at("isthmus_centre_mm"));
      if ((l.axis_point_b_mm - l.axis_point_a_mm).norm() == 0.0)
        throw FormatError("empty subtrochanteric interval for " + id);
      out[id] = l;
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed localisation sidecar " + path.string() + ": " + e.what());
  }
  return out;
}

inline nlohmann::ordered_json to_json(const FemurLocalization& l) {
  nlohmann::ordered_json j;
  j["axis_point_a_mm"] = detail::vec_json(l.axis_point_a_mm, true);
  j["axis_point_b_mm"] = detail::vec_json(l.axis_point_b_mm, true);
  if (l.head_centre_mm) j["head_centre_mm"] = detail::vec_json(*l.head_centre_mm, true);
  if (l.head_radius_mm) j["head_radius_mm"] = *l.head_radius_mm;
  if (l.isthmus_centre_mm) j["isthmus_centre_mm"] = detail::vec_json(*l.isthmus_centre_mm, true);
  return j;
}

}  // namespace xr23d::morph
