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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "xr23d/core/error.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d::morph {

using Vec2 = Eigen::Vector2d;

struct Sphere {
  Vec3 centre = Vec3::Zero();
  double radius = 0.0;
};

struct Circle {
  Vec2 centre = Vec2::Zero();
  double radius = 0.0;
};

struct Line {
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

struct Plane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();

  double signed_distance(const Vec3& p) const { return normal.dot(p - point); }
};

inline Vec3 mean_point(const std::vector<Vec3>& pts) {
  Vec3 s = Vec3::Zero();
  for (const auto& p : pts) s += p;
  return pts.empty() ? s : Vec3(s / double(pts.size()));
}

struct Principal {
  Vec3 mean = Vec3::Zero();
  /// Eigenvalues of the scatter matrix, ascending, and matching unit eigenvectors (columns).
  Vec3 eigenvalues = Vec3::Zero();
  Mat3 axes = Mat3::Identity();
};

inline Principal principal_axes(const std::vector<Vec3>& pts) {
  Principal pc;
  pc.mean = mean_point(pts);
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p - pc.mean;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
  pc.eigenvalues = es.eigenvalues();
  pc.axes = es.eigenvectors();
  return pc;
}

/// Total-least-squares line. Needs at least two distinct points.
inline std::optional<Line> fit_line(const std::vector<Vec3>& pts) {
  if (pts.size() < 2) return std::nullopt;
  const auto pc = principal_axes(pts);
  if (!(pc.eigenvalues[2] > 0.0)) return std::nullopt;
  return Line{pc.mean, pc.axes.col(2).normalized()};
}

/// Total-least-squares plane. Throws PlaneError when the points are
/// (nearly) collinear, i.e. the two largest spreads are not both present.
inline Plane fit_plane(const std::vector<Vec3>& pts) {
  if (pts.size() < 3) throw PlaneError("plane fit needs at least three points");
  const auto pc = principal_axes(pts);
  if (!(pc.eigenvalues[1] > 1e-12 * std::max(1.0, pc.eigenvalues[2])))
    throw PlaneError("points are collinear");
  return Plane{pc.mean, pc.axes.col(0).normalized()};
}

/// Plane through three points; throws PlaneError for collinear input.
inline Plane plane_through(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double scale = std::max({(b - a).norm(), (c - a).norm(), 1.0});
  if (n.norm() <= 1e-9 * scale * scale) throw PlaneError("points are collinear");
  return Plane{(a + b + c) / 3.0, n.normalized()};
}

namespace detail {

/// Linear (algebraic) sphere fit: |p|^2 = 2 c.p + k.
inline std::optional<Sphere> algebraic_sphere(const std::vector<Vec3>& pts) {
  if (pts.size() < 4) return std::nullopt;
  const Vec3 m = mean_point(pts);
  Eigen::MatrixXd a(pts.size(), 4);
  Eigen::VectorXd b(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 p = pts[i] - m;
    a.row(Eigen::Index(i)) << 2 * p.x(), 2 * p.y(), 2 * p.z(), 1.0;
    b[Eigen::Index(i)] = p.squaredNorm();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 4) return std::nullopt;
  const Eigen::Vector4d x = qr.solve(b);
  const double r2 = x[3] + x.head<3>().squaredNorm();
  if (!(r2 > 0.0)) return std::nullopt;
  return Sphere{m + x.head<3>(), std::sqrt(r2)};
}

inline std::optional<Circle> algebraic_circle(const std::vector<Vec2>& pts) {
  if (pts.size() < 3) return std::nullopt;
  Vec2 m = Vec2::Zero();
  for (const auto& p : pts) m += p;
  m /= double(pts.size());
  Eigen::MatrixXd a(pts.size(), 3);
  Eigen::VectorXd b(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2 p = pts[i] - m;
    a.row(Eigen::Index(i)) << 2 * p.x(), 2 * p.y(), 1.0;
    b[Eigen::Index(i)] = p.squaredNorm();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 3) return std::nullopt;
  const Eigen::Vector3d x = qr.solve(b);
  const double r2 = x[2] + x.head<2>().squaredNorm();
  if (!(r2 > 0.0)) return std::nullopt;
  return Circle{m + x.head<2>(), std::sqrt(r2)};
}

/// Gauss-Newton on geometric residuals |p - c| - r, for points in R^N.
template <int N>
void refine_geometric(const std::vector<Eigen::Matrix<double, N, 1>>& pts, Eigen::Matrix<double, N, 1>& c,
                      double& r) {
  using VecN = Eigen::Matrix<double, N, 1>;
  for (int it = 0; it < 50; ++it) {
    Eigen::Matrix<double, N + 1, N + 1> jtj = Eigen::Matrix<double, N + 1, N + 1>::Zero();
    Eigen::Matrix<double, N + 1, 1> jtr = Eigen::Matrix<double, N + 1, 1>::Zero();
    for (const VecN& p : pts) {
      const VecN d = p - c;
      const double n = d.norm();
      if (n == 0.0) continue;
      Eigen::Matrix<double, N + 1, 1> j;
      j.template head<N>() = -d / n;
      j[N] = -1.0;
      const double res = n - r;
      jtj += j * j.transpose();
      jtr += j * res;
    }
    const Eigen::Matrix<double, N + 1, 1> step = jtj.ldlt().solve(-jtr);
    if (!step.allFinite()) return;
    c += step.template head<N>();
    r += step[N];
    if (step.norm() < 1e-12 * std::max(1.0, r)) break;
  }
}

inline double median(std::vector<double> v) {
  const std::size_t h = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(h), v.end());
  const double upper = v[h];
  if (v.size() % 2) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + std::ptrdiff_t(h)));
}

}  // namespace detail

/// Algebraic fit refined on geometric residuals.
inline std::optional<Sphere> fit_sphere(const std::vector<Vec3>& pts) {
  auto s = detail::algebraic_sphere(pts);
  if (!s) return std::nullopt;
  detail::refine_geometric<3>(pts, s->centre, s->radius);
  if (!(s->radius > 0.0) || !s->centre.allFinite()) return std::nullopt;
  return s;
}

inline std::optional<Circle> fit_circle(const std::vector<Vec2>& pts) {
  auto c = detail::algebraic_circle(pts);
  if (!c) return std::nullopt;
  detail::refine_geometric<2>(pts, c->centre, c->radius);
  if (!(c->radius > 0.0) || !c->centre.allFinite()) return std::nullopt;
  return c;
}

struct TrimmedSphere {
  Sphere sphere;
  std::size_t inliers = 0;
};

/// Sphere fit followed by one trimming pass: points whose residual exceeds
/// twice the median residual are dropped and the sphere is refitted.
inline std::optional<TrimmedSphere> fit_sphere_trimmed(const std::vector<Vec3>& pts) {
  const auto first = fit_sphere(pts);
  if (!first) return std::nullopt;
  std::vector<double> res(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) res[i] = std::abs((pts[i] - first->centre).norm() - first->radius);
  const double cut = std::max(2.0 * detail::median(res), 1e-6);
  std::vector<Vec3> kept;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (res[i] <= cut) kept.push_back(pts[i]);
  const auto second = fit_sphere(kept);
  if (!second) return std::nullopt;
  return TrimmedSphere{*second, kept.size()};
}

/// Unit vectors spanning the plane orthogonal to `axis`.
inline std::pair<Vec3, Vec3> orthonormal_basis(const Vec3& axis) {
  const Vec3 a = axis.normalized();
  const Vec3 helper = std::abs(a.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = a.cross(helper).normalized();
  return {e1, a.cross(e1)};
}

inline double angle_deg(const Vec3& a, const Vec3& b) {
  const double c = std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0);
  // atan2 keeps precision near 0 and 180 degrees.
  return std::atan2(a.normalized().cross(b.normalized()).norm(), c) * 180.0 / M_PI;
}

}  // namespace xr23d::morph
