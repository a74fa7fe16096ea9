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
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xr23d/core/error.hpp"
#include "xr23d/morphometry/fitting.hpp"
#include "xr23d/volume/components.hpp"
#include "xr23d/volume/surface.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d::morph {

inline constexpr std::size_t kTopK = 25;
inline constexpr double kRegionFraction = 0.4;
inline constexpr std::size_t kMinSideVoxels = 500;

enum class PelvicLandmark { AsisL, AsisR, PtL, PtR, IsL, IsR, PsisL, PsisR };

inline constexpr std::array<PelvicLandmark, 8> kPelvicLandmarks{
    PelvicLandmark::AsisL, PelvicLandmark::AsisR, PelvicLandmark::PtL,   PelvicLandmark::PtR,
    PelvicLandmark::IsL,   PelvicLandmark::IsR,   PelvicLandmark::PsisL, PelvicLandmark::PsisR};

inline std::string landmark_name(PelvicLandmark l) {
  static const char* names[] = {"asis_l", "asis_r", "pt_l", "pt_r", "is_l", "is_r", "psis_l", "psis_r"};
  return names[int(l)];
}

/// Landmarks in world mm; std::nullopt marks an invalid landmark.
struct PelvicLandmarks {
  std::array<std::optional<Vec3>, 8> points;

  std::optional<Vec3>& operator[](PelvicLandmark l) { return points[std::size_t(l)]; }
  const std::optional<Vec3>& operator[](PelvicLandmark l) const { return points[std::size_t(l)]; }
};

struct ReferencePlane {
  std::string name;
  Plane plane;
};

namespace detail {

/// Centroid of the k best-scoring points, extended to every point tied with the k-th.
inline std::optional<Vec3> top_k_centroid(const std::vector<Vec3>& pts, const std::function<double(const Vec3&)>& score,
                                          std::size_t k = kTopK) {
  if (pts.empty()) return std::nullopt;
  std::vector<double> s(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) s[i] = score(pts[i]);
  std::vector<double> sorted = s;
  const std::size_t kk = std::min(k, sorted.size());
  std::nth_element(sorted.begin(), sorted.begin() + std::ptrdiff_t(kk - 1), sorted.end(), std::greater<>());
  const double cut = sorted[kk - 1];
  Vec3 sum = Vec3::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (s[i] >= cut) sum += pts[i], ++n;
  return Vec3(sum / double(n));
}

struct SideLandmarks {
  std::optional<Vec3> asis, pt, is, psis;
};

inline SideLandmarks side_landmarks(const BinaryMask& side, double mid_x, double medial_sign) {
  SideLandmarks out;
  if (count_foreground(side) < kMinSideVoxels) return out;
  const BinaryMask part = largest_component(side);
  if (count_foreground(part) < kMinSideVoxels) return out;
  const std::vector<Vec3> surface = boundary_points(part);
  double zlo = std::numeric_limits<double>::infinity(), zhi = -zlo, ylo = zlo, yhi = -zlo;
  for (const auto& p : surface) {
    zlo = std::min(zlo, p.z()), zhi = std::max(zhi, p.z());
    ylo = std::min(ylo, p.y()), yhi = std::max(yhi, p.y());
  }
  const double zspan = zhi - zlo, yspan = yhi - ylo;
  std::vector<Vec3> superior, inferior, inferior_posterior;
  for (const auto& p : surface) {
    if (p.z() >= zhi - kRegionFraction * zspan) superior.push_back(p);
    if (p.z() <= zlo + kRegionFraction * zspan) {
      inferior.push_back(p);
      if (p.y() <= ylo + kRegionFraction * yspan) inferior_posterior.push_back(p);
    }
  }
  out.asis = top_k_centroid(superior, [](const Vec3& p) { return p.y(); });
  out.psis = top_k_centroid(superior, [](const Vec3& p) { return -p.y(); });
  // Anterior-inferior direction (0, 1, -1)/sqrt(2); the scale does not change the ranking.
  out.pt = top_k_centroid(inferior, [](const Vec3& p) { return p.y() - p.z(); });
  out.is = top_k_centroid(inferior_posterior, [=](const Vec3& p) { return medial_sign * (p.x() - mid_x); });
  return out;
}

}  // namespace detail

/// Splits the mask at a sagittal plane (+x is the patient's right) and
/// searches each side's largest component for extremal surface points in
/// fixed anatomical gates. The plane passes through the mask centroid unless
/// `mid_x` is given; predictions are split at their ground truth's plane.
inline PelvicLandmarks extract_pelvic_landmarks(const BinaryMask& mask, std::optional<double> mid_plane_x = {}) {
  PelvicLandmarks lm;
  if (count_foreground(mask) == 0) return lm;
  const double mid_x = mid_plane_x ? *mid_plane_x : foreground_centroid(mask).x();
  BinaryMask right = mask.like<std::uint8_t>(), left = mask.like<std::uint8_t>();
  const auto& d = mask.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (!mask(x, y, z)) continue;
        const double wx = mask.index_to_world(x, y, z).x();
        if (wx > mid_x) right(x, y, z) = 1;
        else if (wx < mid_x) left(x, y, z) = 1;
      }
  const auto r = detail::side_landmarks(right, mid_x, -1.0);
  const auto l = detail::side_landmarks(left, mid_x, 1.0);
  lm[PelvicLandmark::AsisR] = r.asis;
  lm[PelvicLandmark::PtR] = r.pt;
  lm[PelvicLandmark::IsR] = r.is;
  lm[PelvicLandmark::PsisR] = r.psis;
  lm[PelvicLandmark::AsisL] = l.asis;
  lm[PelvicLandmark::PtL] = l.pt;
  lm[PelvicLandmark::IsL] = l.is;
  lm[PelvicLandmark::PsisL] = l.psis;
  return lm;
}

/// Plane through both ASIS and the pubic tubercle midpoint, normal anterior.
inline ReferencePlane anterior_pelvic_plane(const PelvicLandmarks& lm) {
  for (auto l : {PelvicLandmark::AsisL, PelvicLandmark::AsisR, PelvicLandmark::PtL, PelvicLandmark::PtR})
    if (!lm[l]) throw PlaneError("APP needs " + landmark_name(l));
  Plane p = plane_through(*lm[PelvicLandmark::AsisL], *lm[PelvicLandmark::AsisR],
                          0.5 * (*lm[PelvicLandmark::PtL] + *lm[PelvicLandmark::PtR]));
  if (p.normal.y() < 0) p.normal = -p.normal;
  return {"APP", p};
}

/// Least-squares plane through the four iliac spines, normal superior.
inline ReferencePlane superior_inferior_spine_plane(const PelvicLandmarks& lm) {
  std::vector<Vec3> pts;
  for (auto l : {PelvicLandmark::AsisL, PelvicLandmark::AsisR, PelvicLandmark::PsisL, PelvicLandmark::PsisR}) {
    if (!lm[l]) throw PlaneError("SISP needs " + landmark_name(l));
    pts.push_back(*lm[l]);
  }
  Plane p = fit_plane(pts);
  if (p.normal.z() < 0) p.normal = -p.normal;
  return {"SISP", p};
}

struct PelvicPlanes {
  std::optional<ReferencePlane> app, sisp;
};

/// Both planes; a plane whose landmarks are missing or collinear stays empty.
inline PelvicPlanes define_planes(const PelvicLandmarks& lm) {
  PelvicPlanes out;
  try {
    out.app = anterior_pelvic_plane(lm);
  } catch (const PlaneError&) {
  }
  try {
    out.sisp = superior_inferior_spine_plane(lm);
  } catch (const PlaneError&) {
  }
  return out;
}

/// Angle of the APP normal from +y and of the SISP normal from +z.
inline double app_tilt_deg(const ReferencePlane& app) { return angle_deg(app.plane.normal, Vec3::UnitY()); }
inline double sisp_tilt_deg(const ReferencePlane& sisp) { return angle_deg(sisp.plane.normal, Vec3::UnitZ()); }

/// Per-landmark Euclidean distance; missing when either side is invalid.
inline std::map<std::string, std::optional<double>> landmark_errors(const PelvicLandmarks& gt,
                                                                    const PelvicLandmarks& pred) {
  std::map<std::string, std::optional<double>> out;
  for (auto l : kPelvicLandmarks) {
    std::optional<double> e;
    if (gt[l] && pred[l]) e = (*gt[l] - *pred[l]).norm();
    out[landmark_name(l) + "_mm"] = e;
  }
  const auto pg = define_planes(gt), pp = define_planes(pred);
  out["app_tilt_deg"] = pg.app && pp.app ? std::optional<double>(angle_deg(pg.app->plane.normal, pp.app->plane.normal))
                                         : std::nullopt;
  out["sisp_tilt_deg"] = pg.sisp && pp.sisp
                             ? std::optional<double>(angle_deg(pg.sisp->plane.normal, pp.sisp->plane.normal))
                             : std::nullopt;
  return out;
}

inline nlohmann::ordered_json to_json(const PelvicLandmarks& lm) {
  nlohmann::ordered_json j;
  for (auto l : kPelvicLandmarks) {
    const auto& p = lm[l];
    j[landmark_name(l)] = p ? nlohmann::ordered_json{p->x(), p->y(), p->z()} : nlohmann::ordered_json(nullptr);
  }
  const auto planes = define_planes(lm);
  j["app_tilt_deg"] = planes.app ? nlohmann::ordered_json(app_tilt_deg(*planes.app)) : nullptr;
  j["sisp_tilt_deg"] = planes.sisp ? nlohmann::ordered_json(sisp_tilt_deg(*planes.sisp)) : nullptr;
  return j;
}

}  // namespace xr23d::morph
