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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xr23d/core/error.hpp"
#include "xr23d/core/format.hpp"
#include "xr23d/volume/distance_transform.hpp"
#include "xr23d/volume/surface.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d::metrics {

/// Tolerance used by the reported NSD column.
inline constexpr double kDefaultTau = 1.5;

enum class Degenerate { None, EmptyGt, EmptyPred, BothEmpty };

inline std::string_view to_string(Degenerate d) {
  switch (d) {
    case Degenerate::None: return "none";
    case Degenerate::EmptyGt: return "empty_gt";
    case Degenerate::EmptyPred: return "empty_pred";
    case Degenerate::BothEmpty: return "both_empty";
  }
  return "none";
}

inline Degenerate degenerate_from_string(std::string_view s) {
  if (s == "empty_gt") return Degenerate::EmptyGt;
  if (s == "empty_pred") return Degenerate::EmptyPred;
  if (s == "both_empty") return Degenerate::BothEmpty;
  if (s == "none") return Degenerate::None;
  throw FormatError("unknown degenerate flag: " + std::string(s));
}

struct MetricRecord {
  double dsc = 0.0;
  double hd95 = 0.0;  ///< mm
  double asd = 0.0;   ///< mm
  double nsd = 0.0;
  double tau = kDefaultTau;  ///< mm
  Degenerate degenerate = Degenerate::None;
};

/// Report column name for NSD at `tau`, e.g. "nsd@1.5mm".
inline std::string nsd_name(double tau) { return "nsd@" + format_exact(tau) + "mm"; }

template <typename A, typename B>
void require_same_geometry(const Volume<A>& gt, const Volume<B>& pred) {
  if (gt.dims() != pred.dims() || (gt.spacing() - pred.spacing()).cwiseAbs().maxCoeff() > 1e-6) {
    throw ShapeError("ground truth and prediction differ in dims or spacing");
  }
}

/// 2|A∩B| / (|A|+|B|); two empty masks score 1.
template <typename T>
double dice(const Volume<T>& gt, const Volume<T>& pred) {
  require_same_geometry(gt, pred);
  std::size_t a = 0, b = 0, both = 0;
  auto g = gt.data();
  auto p = pred.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool x = g[i] != T{0}, y = p[i] != T{0};
    a += x;
    b += y;
    both += x && y;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * double(both) / double(a + b);
}

struct SurfaceDistances {
  std::vector<double> gt_to_pred;  ///< one entry per GT boundary voxel, mm
  std::vector<double> pred_to_gt;  ///< one entry per prediction boundary voxel, mm
};

/// Distance from every boundary voxel of one mask to the nearest boundary
/// voxel of the other, via an exact anisotropic feature transform.
template <typename T>
SurfaceDistances surface_distances(const Volume<T>& gt, const Volume<T>& pred, unsigned threads = 1) {
  require_same_geometry(gt, pred);
  const BinaryMask gt_surface = boundary_mask(gt);
  const BinaryMask pred_surface = boundary_mask(pred);
  if (count_foreground(gt_surface) == 0 || count_foreground(pred_surface) == 0) {
    throw DegenerateError("surface distances need two non-empty masks");
  }
  const Vec3 spacing = gt.spacing();
  const DistanceField to_pred = euclidean_feature_transform(pred_surface, spacing, threads);
  const DistanceField to_gt = euclidean_feature_transform(gt_surface, spacing, threads);
  SurfaceDistances out;
  for (std::size_t i = 0; i < gt_surface.size(); ++i) {
    if (gt_surface[i]) out.gt_to_pred.push_back(to_pred.distance(i));
    if (pred_surface[i]) out.pred_to_gt.push_back(to_gt.distance(i));
  }
  return out;
}

/// Percentile `q` (0-100) with linear interpolation between order statistics.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DegenerateError("percentile of an empty list");
  std::sort(values.begin(), values.end());
  const double rank = q / 100.0 * double(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - double(lo)) * (values[hi] - values[lo]);
}

inline void require_distances(const SurfaceDistances& d) {
  if (d.gt_to_pred.empty() || d.pred_to_gt.empty()) throw DegenerateError("empty surface distance list");
}

/// Larger of the two directed 95th percentiles.
inline double hd95(const SurfaceDistances& d) {
  require_distances(d);
  return std::max(percentile(d.gt_to_pred, 95.0), percentile(d.pred_to_gt, 95.0));
}

/// Mean over both directed lists pooled together.
inline double asd(const SurfaceDistances& d) {
  require_distances(d);
  double sum = 0.0;
  for (double v : d.gt_to_pred) sum += v;
  for (double v : d.pred_to_gt) sum += v;
  return sum / double(d.gt_to_pred.size() + d.pred_to_gt.size());
}

/// Fraction of boundary points of both masks within `tau` (inclusive) of the
/// other surface.
inline double nsd(const SurfaceDistances& d, double tau) {
  require_distances(d);
  if (!(tau > 0.0)) throw std::invalid_argument("nsd tolerance must be positive");
  std::size_t within = 0;
  for (double v : d.gt_to_pred) within += v <= tau;
  for (double v : d.pred_to_gt) within += v <= tau;
  return double(within) / double(d.gt_to_pred.size() + d.pred_to_gt.size());
}

/// All four metrics for one pair. When exactly one mask is empty the surface
/// metrics take the volume diagonal (mm) as a sentinel and DSC/NSD are 0;
/// two empty masks count as a perfect match.
template <typename T>
MetricRecord evaluate_pair(const Volume<T>& gt, const Volume<T>& pred, double tau = kDefaultTau,
                           unsigned threads = 1) {
  require_same_geometry(gt, pred);
  if (!(tau > 0.0)) throw std::invalid_argument("nsd tolerance must be positive");
  MetricRecord r;
  r.tau = tau;
  const bool gt_empty = count_foreground(gt) == 0;
  const bool pred_empty = count_foreground(pred) == 0;
  if (gt_empty && pred_empty) {
    r.dsc = 1.0;
    r.nsd = 1.0;
    r.degenerate = Degenerate::BothEmpty;
    return r;
  }
  if (gt_empty || pred_empty) {
    r.dsc = 0.0;
    r.nsd = 0.0;
    r.hd95 = r.asd = gt.diagonal_mm();
    r.degenerate = gt_empty ? Degenerate::EmptyGt : Degenerate::EmptyPred;
    return r;
  }
  r.dsc = dice(gt, pred);
  const SurfaceDistances d = surface_distances(gt, pred, threads);
  r.hd95 = hd95(d);
  r.asd = asd(d);
  r.nsd = nsd(d, tau);
  return r;
}

}  // namespace xr23d::metrics
