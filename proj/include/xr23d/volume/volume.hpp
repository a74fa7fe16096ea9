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

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "xr23d/core/error.hpp"

namespace xr23d {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Dims = std::array<std::int64_t, 3>;

inline constexpr double kOrthonormalTolerance = 1e-6;

/// Oriented, spaced 3D lattice. World position of voxel (i, j, k) is
/// `origin + direction * diag(spacing) * (i, j, k)`; voxel centers sit on the
/// lattice points. The x index varies fastest in memory.
///
/// After `read_volume` the direction is (close to) identity and the axes are
/// R-A-S: +x toward the patient's right, +y anterior, +z superior.
template <typename T>
class Volume {
 public:
  using value_type = T;

  Volume() = default;

  Volume(Dims dims, Vec3 spacing, Vec3 origin = Vec3::Zero(),
         Mat3 direction = Mat3::Identity(), T fill = T{})
      : dims_(dims), spacing_(std::move(spacing)), origin_(std::move(origin)),
        direction_(std::move(direction)) {
    validate_geometry();
    data_.assign(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]), fill);
  }

  Volume(Dims dims, Vec3 spacing, Vec3 origin, Mat3 direction, std::vector<T> data)
      : dims_(dims), spacing_(std::move(spacing)), origin_(std::move(origin)),
        direction_(std::move(direction)), data_(std::move(data)) {
    validate_geometry();
    if (data_.size() != static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2])) {
      throw GeometryError("voxel data length does not match dims");
    }
  }

  /// Empty lattice with this volume's geometry and a different voxel type.
  template <typename U>
  Volume<U> like(U fill = U{}) const {
    return Volume<U>(dims_, spacing_, origin_, direction_, fill);
  }

  const Dims& dims() const noexcept { return dims_; }
  const Vec3& spacing() const noexcept { return spacing_; }
  const Vec3& origin() const noexcept { return origin_; }
  const Mat3& direction() const noexcept { return direction_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  std::size_t index(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    return static_cast<std::size_t>(x + dims_[0] * (y + dims_[1] * z));
  }
  std::array<std::int64_t, 3> coords(std::size_t linear) const noexcept {
    const auto l = static_cast<std::int64_t>(linear);
    return {l % dims_[0], (l / dims_[0]) % dims_[1], l / (dims_[0] * dims_[1])};
  }
  bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_[0] && y < dims_[1] && z < dims_[2];
  }

  T& operator()(std::int64_t x, std::int64_t y, std::int64_t z) noexcept { return data_[index(x, y, z)]; }
  const T& operator()(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    return data_[index(x, y, z)];
  }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Value at (x, y, z), or `outside` when the index is off the lattice.
  T value_or(std::int64_t x, std::int64_t y, std::int64_t z, T outside = T{}) const noexcept {
    return contains(x, y, z) ? data_[index(x, y, z)] : outside;
  }

  Mat3 index_to_world_matrix() const { return direction_ * spacing_.asDiagonal(); }

  Vec3 index_to_world(const Vec3& continuous_index) const {
    return origin_ + direction_ * spacing_.cwiseProduct(continuous_index);
  }
  Vec3 index_to_world(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return index_to_world(Vec3(double(x), double(y), double(z)));
  }
  Vec3 world_to_index(const Vec3& world) const {
    return (direction_.transpose() * (world - origin_)).cwiseQuotient(spacing_);
  }

  /// Physical size of the lattice in mm, measured edge to edge.
  Vec3 extent() const {
    return Vec3(double(dims_[0]) * spacing_.x(), double(dims_[1]) * spacing_.y(),
                double(dims_[2]) * spacing_.z());
  }
  double diagonal_mm() const { return extent().norm(); }
  double voxel_volume() const { return spacing_.prod(); }

  template <typename U>
  bool same_geometry(const Volume<U>& other, double tolerance = 1e-6) const {
    return dims_ == other.dims() && (spacing_ - other.spacing()).cwiseAbs().maxCoeff() <= tolerance &&
           (origin_ - other.origin()).cwiseAbs().maxCoeff() <= tolerance &&
           (direction_ - other.direction()).cwiseAbs().maxCoeff() <= tolerance;
  }

 private:
  void validate_geometry() const {
    for (auto n : dims_) {
      if (n <= 0) throw GeometryError("volume dims must be positive");
    }
    if (!(spacing_.array() > 0.0).all() || !spacing_.allFinite()) {
      throw GeometryError("voxel spacing must be positive and finite");
    }
    const Mat3 gram = direction_.transpose() * direction_;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kOrthonormalTolerance ||
        std::abs(std::abs(direction_.determinant()) - 1.0) > kOrthonormalTolerance) {
      throw GeometryError("direction cosines must be orthonormal");
    }
  }

  Dims dims_{0, 0, 0};
  Vec3 spacing_ = Vec3::Ones();
  Vec3 origin_ = Vec3::Zero();
  Mat3 direction_ = Mat3::Identity();
  std::vector<T> data_;
};

using VoxelGrid = Volume<float>;
using LabelGrid = Volume<std::int32_t>;
/// Binary segmentation; every voxel is 0 or 1.
using BinaryMask = Volume<std::uint8_t>;

template <typename T>
bool is_binary(const Volume<T>& grid) {
  for (const T& v : grid.data()) {
    if (v != T{0} && v != T{1}) return false;
  }
  return true;
}

/// Nonzero voxels become 1.
template <typename T>
BinaryMask binarize(const Volume<T>& grid) {
  BinaryMask mask = grid.template like<std::uint8_t>();
  auto src = grid.data();
  auto dst = mask.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] != T{0} ? 1 : 0;
  return mask;
}

template <typename T>
std::size_t count_foreground(const Volume<T>& grid) {
  std::size_t n = 0;
  for (const T& v : grid.data()) n += v != T{0};
  return n;
}

/// World-space center of mass of the nonzero voxels; all-NaN
/// when the volume has no foreground.
template <typename T>
Vec3 foreground_centroid(const Volume<T>& grid) {
  Vec3 sum = Vec3::Zero();
  std::size_t n = 0;
  const auto& d = grid.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x)
        if (grid(x, y, z) != T{0}) {
          sum += Vec3(double(x), double(y), double(z));
          ++n;
        }
  if (n == 0) return Vec3::Constant(std::nan(""));
  return grid.index_to_world(sum / double(n));
}

template <typename To, typename From>
Volume<To> cast_volume(const Volume<From>& grid) {
  Volume<To> out = grid.template like<To>();
  auto src = grid.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if constexpr (std::is_integral_v<To> && std::is_floating_point_v<From>) {
      dst[i] = static_cast<To>(std::lround(src[i]));
    } else {
      dst[i] = static_cast<To>(src[i]);
    }
  }
  return out;
}

}  // namespace xr23d
