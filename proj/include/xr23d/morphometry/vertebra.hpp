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
#include <cstdint>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xr23d/core/error.hpp"
#include "xr23d/morphometry/fitting.hpp"
#include "xr23d/volume/components.hpp"
#include "xr23d/volume/morphology.hpp"
#include "xr23d/volume/resample.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d::morph {

inline constexpr double kCanalClosingRadiusVoxels = 3.0;
inline constexpr std::size_t kMinCanalVoxels = 27;

enum class VertebraParam { Vcl, BodyHeightAnt, BodyHeightPost, EndplateWidthSup, EndplateDepthSup, SpinousLength, BodyWidth };

inline constexpr std::array<VertebraParam, 7> kVertebraParams{
    VertebraParam::Vcl,           VertebraParam::BodyHeightAnt,    VertebraParam::BodyHeightPost,
    VertebraParam::EndplateWidthSup, VertebraParam::EndplateDepthSup, VertebraParam::SpinousLength,
    VertebraParam::BodyWidth};

inline std::string param_name(VertebraParam p) {
  static const char* names[] = {"vcl_mm", "bh_ant_mm", "bh_post_mm", "epw_sup_mm", "epd_sup_mm", "spl_mm", "bw_mm"};
  return names[int(p)];
}

/// Seven lengths in mm; std::nullopt marks an invalid parameter.
struct VertebraMorphometry {
  std::array<std::optional<double>, 7> values;
  std::string failure;

  std::optional<double>& operator[](VertebraParam p) { return values[std::size_t(p)]; }
  const std::optional<double>& operator[](VertebraParam p) const { return values[std::size_t(p)]; }
};

/// Local anatomical frame anchored at the canal centroid.
struct VertebraFrame {
  Vec3 origin;
  Vec3 superior;
  Vec3 anterior;
  Vec3 lateral;
};

struct VertebraPartition {
  BinaryMask body;
  BinaryMask posterior;
  BinaryMask canal;
  VertebraFrame frame;
  /// Distances from the canal centroid to the canal walls along the AP line.
  double canal_front_mm = 0.0, canal_back_mm = 0.0;
};

namespace detail {

inline bool inside(const BinaryMask& m, const Vec3& world) {
  return sample_nearest(m, m.world_to_index(world), std::uint8_t{0}) != 0;
}

/// Distance from `from` to the first sample along `dir` whose inside-state
/// equals `target`; std::nullopt when the ray leaves the lattice first.
inline std::optional<double> march(const BinaryMask& m, const Vec3& from, const Vec3& dir, bool target, double step) {
  // Integer step count keeps t = k * step exact under spacing scaling.
  const auto n = static_cast<std::int64_t>(std::ceil(m.diagonal_mm() / step)) + 1;
  for (std::int64_t k = 0; k <= n; ++k) {
    const double t = double(k) * step;
    if (inside(m, from + t * dir) == target) return t;
  }
  return std::nullopt;
}

/// Length of the inside run through `p` along `dir`.
inline std::optional<double> chord(const BinaryMask& m, const Vec3& p, const Vec3& dir, double step) {
  if (!inside(m, p)) return std::nullopt;
  const auto fwd = march(m, p, dir, false, step), back = march(m, p, -dir, false, step);
  if (!fwd || !back) return std::nullopt;
  return *fwd + *back - step;
}

inline double ray_step(const BinaryMask& m) { return 0.05 * m.spacing().minCoeff(); }

}  // namespace detail

/// Canal = largest cavity of the closed, axially hole-filled mask; body =
/// mask voxels anterior of the canal's front wall. Throws PartitionError when
/// no canal exists.
inline VertebraPartition segment_vertebral_body(const BinaryMask& input) {
  if (count_foreground(input) == 0) throw PartitionError("empty mask");
  const BinaryMask mask = largest_component(input);
  const BinaryMask closed = close_ball(mask, kCanalClosingRadiusVoxels);
  const BinaryMask holes = axial_holes(closed);
  BinaryMask cavity = mask.like<std::uint8_t>();
  for (std::size_t i = 0; i < mask.size(); ++i) cavity[i] = (closed[i] || holes[i]) && !mask[i] ? 1 : 0;
  VertebraPartition part;
  part.canal = largest_component(cavity);
  if (count_foreground(part.canal) < kMinCanalVoxels) throw PartitionError("no vertebral canal found");

  // Superior axis through per-slice canal centroids.
  const auto& d = mask.dims();
  std::vector<Vec3> centres;
  for (std::int64_t z = 0; z < d[2]; ++z) {
    Vec3 s = Vec3::Zero();
    std::size_t n = 0;
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x)
        if (part.canal(x, y, z)) s += Vec3(double(x), double(y), double(z)), ++n;
    if (n) centres.push_back(mask.index_to_world(Vec3(s / double(n))));
  }
  VertebraFrame& f = part.frame;
  f.origin = foreground_centroid(part.canal);
  f.superior = mask.direction().col(2);
  if (centres.size() >= 3) {
    if (const auto line = fit_line(centres); line && std::abs(line->direction.dot(f.superior)) > 0.5)
      f.superior = line->direction.dot(f.superior) < 0 ? -line->direction : line->direction;
  }
  Vec3 towards_body = foreground_centroid(mask) - f.origin;
  towards_body -= towards_body.dot(f.superior) * f.superior;
  if (towards_body.norm() < 1e-9) throw PartitionError("canal centred on the mask; no anterior direction");
  f.anterior = towards_body.normalized();
  f.lateral = f.superior.cross(f.anterior);

  const double step = detail::ray_step(mask);
  const auto front = detail::march(mask, f.origin, f.anterior, true, step);
  const auto back = detail::march(mask, f.origin, -f.anterior, true, step);
  if (!front || !back) throw PartitionError("canal is not enclosed along the anteroposterior axis");
  part.canal_front_mm = *front;
  part.canal_back_mm = *back;

  part.body = mask.like<std::uint8_t>();
  part.posterior = mask.like<std::uint8_t>();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        if (!mask(x, y, z)) continue;
        const double a = (mask.index_to_world(x, y, z) - f.origin).dot(f.anterior);
        (a >= *front - 0.5 * step ? part.body : part.posterior)(x, y, z) = 1;
      }
  if (count_foreground(part.body) == 0 || count_foreground(part.posterior) == 0)
    throw PartitionError("degenerate body/posterior split");
  return part;
}

/// Seven lengths measured by ray run-lengths in the canal frame. A failed
/// partition yields a record with every parameter invalid.
inline VertebraMorphometry vertebra_morphometry(const BinaryMask& mask) {
  VertebraMorphometry out;
  VertebraPartition part;
  try {
    part = segment_vertebral_body(mask);
  } catch (const PartitionError& e) {
    out.failure = e.what();
    return out;
  }
  const auto& f = part.frame;
  const BinaryMask& body = part.body;
  const double step = detail::ray_step(mask);
  out[VertebraParam::Vcl] = part.canal_front_mm + part.canal_back_mm;

  // Body depth on the AP line through the canal centroid.
  const Vec3 wall = f.origin + part.canal_front_mm * f.anterior;
  const auto depth = detail::chord(body, wall + 0.5 * step * f.anterior, f.anterior, step);
  // Posterior-most point of the posterior elements along -anterior.
  double reach = -std::numeric_limits<double>::infinity();
  const auto& d = mask.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x)
        if (part.posterior(x, y, z)) reach = std::max(reach, -(mask.index_to_world(x, y, z) - f.origin).dot(f.anterior));
  if (std::isfinite(reach)) {
    // Voxel centres sit half a voxel inside the surface.
    const Vec3 local = mask.direction().transpose() * f.anterior;
    const double half = 0.5 * mask.spacing().cwiseProduct(local).cwiseAbs().maxCoeff();
    const double spl = reach + half - part.canal_back_mm;
    if (spl > 0) out[VertebraParam::SpinousLength] = spl;
  }
  if (!depth) return out;

  const Vec3 mid = wall + 0.5 * *depth * f.anterior;
  const double inset = 0.15 * *depth;
  out[VertebraParam::BodyHeightAnt] = detail::chord(body, wall + (*depth - inset) * f.anterior, f.superior, step);
  out[VertebraParam::BodyHeightPost] = detail::chord(body, wall + inset * f.anterior, f.superior, step);
  out[VertebraParam::BodyWidth] = detail::chord(body, mid, f.lateral, step);
  if (const auto height = detail::chord(body, mid, f.superior, step)) {
    const auto up = detail::march(body, mid, f.superior, false, step);
    if (!up) return out;
    const Vec3 sup = mid + (*up - 0.1 * *height) * f.superior;
    out[VertebraParam::EndplateWidthSup] = detail::chord(body, sup, f.lateral, step);
    out[VertebraParam::EndplateDepthSup] = detail::chord(body, sup, f.anterior, step);
  }
  return out;
}

/// Absolute differences where both sides are valid.
inline std::map<std::string, std::optional<double>> morphometry_errors(const VertebraMorphometry& gt,
                                                                      const VertebraMorphometry& pred) {
  std::map<std::string, std::optional<double>> out;
  for (auto p : kVertebraParams) {
    std::optional<double> e;
    if (gt[p] && pred[p]) e = std::abs(*gt[p] - *pred[p]);
    out[param_name(p)] = e;
  }
  return out;
}

inline nlohmann::ordered_json to_json(const VertebraMorphometry& m) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json flags;
  for (auto p : kVertebraParams) {
    j[param_name(p)] = m[p] ? nlohmann::ordered_json(*m[p]) : nullptr;
    flags[param_name(p).substr(0, param_name(p).size() - 3) + "_valid"] = bool(m[p]);
  }
  j["flags"] = flags;
  if (!m.failure.empty()) j["failure"] = m.failure;
  return j;
}

}  // namespace xr23d::morph
