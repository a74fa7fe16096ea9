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

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <type_traits>
#include <vector>

#include "xr23d/core/error.hpp"
#include "xr23d/volume/volume.hpp"

namespace xr23d {

namespace nifti {

// NIfTI-1 single-file header, byte layout as in nifti1.h.
#pragma pack(push, 1)
struct Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1;
  float intent_p2;
  float intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max;
  float cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax;
  std::int32_t glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b;
  float quatern_c;
  float quatern_d;
  float qoffset_x;
  float qoffset_y;
  float qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Header) == 348);
static_assert(offsetof(Header, magic) == 344);

enum DataType : std::int16_t { kUInt8 = 2, kInt16 = 4, kInt32 = 8, kFloat32 = 16 };

inline int bytes_per_voxel(std::int16_t datatype) {
  switch (datatype) {
    case kUInt8: return 1;
    case kInt16: return 2;
    case kInt32: return 4;
    case kFloat32: return 4;
    default: return 0;
  }
}

template <typename T>
constexpr std::int16_t datatype_of() {
  if constexpr (std::is_same_v<T, std::uint8_t>) return kUInt8;
  else if constexpr (std::is_same_v<T, std::int16_t>) return kInt16;
  else if constexpr (std::is_same_v<T, std::int32_t>) return kInt32;
  else if constexpr (std::is_same_v<T, float>) return kFloat32;
  else static_assert(sizeof(T) == 0, "voxel type has no NIfTI-1 datatype");
}

/// Rotation (with optional reflection folded into qfac) from quaternion
/// parameters, following the NIfTI-1 qform convention.
inline Mat3 quaternion_to_rotation(double b, double c, double d, double qfac) {
  double a = 1.0 - (b * b + c * c + d * d);
  if (a < 1e-7) {
    a = 1.0 / std::sqrt(b * b + c * c + d * d);
    b *= a;
    c *= a;
    d *= a;
    a = 0.0;
  } else {
    a = std::sqrt(a);
  }
  Mat3 r;
  r << a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c),
      2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b),
      2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b;
  if (qfac < 0) r.col(2) *= -1.0;
  return r;
}

struct Quaternion {
  double b, c, d, qfac;
};

inline Quaternion rotation_to_quaternion(Mat3 r) {
  double qfac = 1.0;
  if (r.determinant() < 0) {
    qfac = -1.0;
    r.col(2) *= -1.0;
  }
  double a = r(0, 0) + r(1, 1) + r(2, 2) + 1.0;
  double b, c, d;
  if (a > 0.5) {
    a = 0.5 * std::sqrt(a);
    b = 0.25 * (r(2, 1) - r(1, 2)) / a;
    c = 0.25 * (r(0, 2) - r(2, 0)) / a;
    d = 0.25 * (r(1, 0) - r(0, 1)) / a;
  } else {
    const double xd = 1.0 + r(0, 0) - (r(1, 1) + r(2, 2));
    const double yd = 1.0 + r(1, 1) - (r(0, 0) + r(2, 2));
    const double zd = 1.0 + r(2, 2) - (r(0, 0) + r(1, 1));
    if (xd > 1.0) {
      b = 0.5 * std::sqrt(xd);
      c = 0.25 * (r(0, 1) + r(1, 0)) / b;
      d = 0.25 * (r(0, 2) + r(2, 0)) / b;
      a = 0.25 * (r(2, 1) - r(1, 2)) / b;
    } else if (yd > 1.0) {
      c = 0.5 * std::sqrt(yd);
      b = 0.25 * (r(0, 1) + r(1, 0)) / c;
      d = 0.25 * (r(1, 2) + r(2, 1)) / c;
      a = 0.25 * (r(0, 2) - r(2, 0)) / c;
    } else {
      d = 0.5 * std::sqrt(zd);
      b = 0.25 * (r(0, 2) + r(2, 0)) / d;
      c = 0.25 * (r(1, 2) + r(2, 1)) / d;
      a = 0.25 * (r(1, 0) - r(0, 1)) / d;
    }
    if (a < 0.0) {
      b = -b;
      c = -c;
      d = -d;
    }
  }
  return {b, c, d, qfac};
}

/// Voxel-to-world affine stored in a header: sform if set, else qform, else
/// the bare pixdim scaling. Units are converted to mm.
struct Affine {
  Mat3 linear = Mat3::Identity();
  Vec3 offset = Vec3::Zero();
};

inline Affine header_affine(const Header& h) {
  Affine a;
  if (h.sform_code > 0) {
    for (int c = 0; c < 3; ++c) {
      a.linear(0, c) = h.srow_x[c];
      a.linear(1, c) = h.srow_y[c];
      a.linear(2, c) = h.srow_z[c];
    }
    a.offset = Vec3(h.srow_x[3], h.srow_y[3], h.srow_z[3]);
  } else if (h.qform_code > 0) {
    const double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
    const Mat3 r = quaternion_to_rotation(h.quatern_b, h.quatern_c, h.quatern_d, qfac);
    const Vec3 spacing(std::abs(h.pixdim[1]), std::abs(h.pixdim[2]), std::abs(h.pixdim[3]));
    a.linear = r * spacing.asDiagonal();
    a.offset = Vec3(h.qoffset_x, h.qoffset_y, h.qoffset_z);
  } else {
    a.linear = Vec3(std::abs(h.pixdim[1]), std::abs(h.pixdim[2]), std::abs(h.pixdim[3])).asDiagonal();
  }
  double to_mm = 1.0;
  switch (h.xyzt_units & 0x07) {
    case 1: to_mm = 1000.0; break;   // meter
    case 3: to_mm = 0.001; break;    // micron
    default: break;                  // mm or unknown
  }
  a.linear *= to_mm;
  a.offset *= to_mm;
  return a;
}

struct GzFile {
  gzFile handle = nullptr;
  explicit GzFile(gzFile h) : handle(h) {}
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;
  ~GzFile() {
    if (handle) gzclose(handle);
  }
};

inline bool has_gz_suffix(const std::filesystem::path& p) { return p.extension() == ".gz"; }

inline std::int32_t byteswap32(std::int32_t v) {
  auto u = static_cast<std::uint32_t>(v);
  u = (u >> 24) | ((u >> 8) & 0xFF00u) | ((u << 8) & 0xFF0000u) | (u << 24);
  return static_cast<std::int32_t>(u);
}

/// Moves a volume onto R-A-S voxel axes by permuting and flipping the lattice.
/// Each voxel axis is matched to the world axis it is most aligned with, in
/// order of decreasing alignment; any residual obliquity stays in the
/// direction matrix.
template <typename T>
Volume<T> to_ras(const Volume<T>& grid) {
  const Mat3 dir = grid.direction();
  std::array<int, 3> world_of_axis{-1, -1, -1};
  std::array<bool, 3> world_used{false, false, false};
  for (int pick = 0; pick < 3; ++pick) {
    double best = -1.0;
    int best_axis = -1, best_world = -1;
    for (int axis = 0; axis < 3; ++axis) {
      if (world_of_axis[axis] >= 0) continue;
      for (int w = 0; w < 3; ++w) {
        if (world_used[w]) continue;
        if (std::abs(dir(w, axis)) > best) {
          best = std::abs(dir(w, axis));
          best_axis = axis;
          best_world = w;
        }
      }
    }
    world_of_axis[best_axis] = best_world;
    world_used[best_world] = true;
  }
  std::array<int, 3> axis_of_world{};
  std::array<bool, 3> flip{};
  for (int axis = 0; axis < 3; ++axis) {
    axis_of_world[world_of_axis[axis]] = axis;
    flip[world_of_axis[axis]] = dir(world_of_axis[axis], axis) < 0.0;
  }
  const bool identity = axis_of_world == std::array<int, 3>{0, 1, 2} && !flip[0] && !flip[1] && !flip[2];
  if (identity) return grid;

  const Dims& old_dims = grid.dims();
  Dims new_dims{};
  Vec3 new_spacing;
  Mat3 new_dir;
  Vec3 new_origin = grid.origin();
  const Mat3 old_linear = grid.index_to_world_matrix();
  for (int w = 0; w < 3; ++w) {
    const int axis = axis_of_world[w];
    new_dims[w] = old_dims[axis];
    new_spacing[w] = grid.spacing()[axis];
    new_dir.col(w) = dir.col(axis) * (flip[w] ? -1.0 : 1.0);
    if (flip[w]) new_origin += old_linear.col(axis) * double(old_dims[axis] - 1);
  }
  Volume<T> out(new_dims, new_spacing, new_origin, new_dir);
  std::array<std::int64_t, 3> src{};
  for (std::int64_t k = 0; k < new_dims[2]; ++k)
    for (std::int64_t j = 0; j < new_dims[1]; ++j)
      for (std::int64_t i = 0; i < new_dims[0]; ++i) {
        const std::array<std::int64_t, 3> dst{i, j, k};
        for (int w = 0; w < 3; ++w) {
          const int axis = axis_of_world[w];
          src[axis] = flip[w] ? old_dims[axis] - 1 - dst[w] : dst[w];
        }
        out(i, j, k) = grid(src[0], src[1], src[2]);
      }
  return out;
}

}  // namespace nifti

/// Reads a NIfTI-1 file (.nii or .nii.gz) and returns it on R-A-S axes,
/// converting voxels to `T` (integral targets round).
template <typename T = float>
Volume<T> read_volume(const std::filesystem::path& path) {
  using namespace nifti;
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  GzFile file(gzopen(path.c_str(), "rb"));
  if (!file.handle) throw IoError("cannot open " + path.string());

  Header h{};
  if (gzread(file.handle, &h, sizeof(Header)) != static_cast<int>(sizeof(Header))) {
    throw FormatError("truncated NIfTI header: " + path.string());
  }
  if (h.sizeof_hdr != 348) {
    if (byteswap32(h.sizeof_hdr) == 348) throw UnsupportedError("big-endian NIfTI is not supported");
    throw FormatError("not a NIfTI-1 header (sizeof_hdr != 348): " + path.string());
  }
  if (std::memcmp(h.magic, "ni1\0", 4) == 0) {
    throw UnsupportedError("two-file NIfTI (.hdr/.img) is not supported");
  }
  if (std::memcmp(h.magic, "n+1\0", 4) != 0) throw FormatError("bad NIfTI-1 magic: " + path.string());
  if (h.dim[0] < 1 || h.dim[0] > 7) throw FormatError("bad dim[0] in NIfTI header");
  Dims dims{1, 1, 1};
  for (int i = 1; i <= h.dim[0]; ++i) {
    if (h.dim[i] < 1) throw FormatError("non-positive dimension in NIfTI header");
    if (i <= 3) dims[i - 1] = h.dim[i];
    else if (h.dim[i] != 1) throw UnsupportedError("only single-volume (3D) NIfTI files are supported");
  }
  const int bpv = bytes_per_voxel(h.datatype);
  if (bpv == 0) throw UnsupportedError("unsupported NIfTI datatype " + std::to_string(h.datatype));
  if (h.bitpix != bpv * 8) throw FormatError("bitpix does not match datatype");
  if (h.vox_offset < 348.0f) throw FormatError("vox_offset inside header");

  const auto skip = static_cast<long>(h.vox_offset) - static_cast<long>(sizeof(Header));
  if (skip > 0) {
    std::vector<char> pad(static_cast<std::size_t>(skip));
    if (gzread(file.handle, pad.data(), static_cast<unsigned>(skip)) != skip) {
      throw FormatError("truncated NIfTI extension block");
    }
  }
  const std::size_t count = static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
  std::vector<unsigned char> raw(count * static_cast<std::size_t>(bpv));
  std::size_t got = 0;
  while (got < raw.size()) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(raw.size() - got, 1u << 30));
    const int n = gzread(file.handle, raw.data() + got, chunk);
    if (n <= 0) throw FormatError("truncated NIfTI voxel data: " + path.string());
    got += static_cast<std::size_t>(n);
  }

  const bool scaled = h.scl_slope != 0.0f && std::isfinite(h.scl_slope) &&
                      (h.scl_slope != 1.0f || h.scl_inter != 0.0f);
  std::vector<T> data(count);
  auto convert = [&](auto tag) {
    using Stored = decltype(tag);
    for (std::size_t i = 0; i < count; ++i) {
      Stored s;
      std::memcpy(&s, raw.data() + i * sizeof(Stored), sizeof(Stored));
      if (scaled || (std::is_integral_v<T> && std::is_floating_point_v<Stored>)) {
        double v = static_cast<double>(s);
        if (scaled) v = v * h.scl_slope + h.scl_inter;
        if constexpr (std::is_integral_v<T>) data[i] = static_cast<T>(std::llround(v));
        else data[i] = static_cast<T>(v);
      } else {
        data[i] = static_cast<T>(s);
      }
    }
  };
  switch (h.datatype) {
    case kUInt8: convert(std::uint8_t{}); break;
    case kInt16: convert(std::int16_t{}); break;
    case kInt32: convert(std::int32_t{}); break;
    case kFloat32: convert(float{}); break;
    default: break;
  }

  const Affine affine = header_affine(h);
  Vec3 spacing;
  Mat3 direction;
  for (int c = 0; c < 3; ++c) {
    spacing[c] = affine.linear.col(c).norm();
    if (!(spacing[c] > 0.0)) throw FormatError("degenerate voxel-to-world affine");
    direction.col(c) = affine.linear.col(c) / spacing[c];
  }
  const Mat3 gram = direction.transpose() * direction;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kOrthonormalTolerance) {
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-2) {
      throw UnsupportedError("sheared voxel-to-world affine is not supported");
    }
    Eigen::JacobiSVD<Mat3> svd(direction, Eigen::ComputeFullU | Eigen::ComputeFullV);
    direction = svd.matrixU() * svd.matrixV().transpose();
  }
  return to_ras(Volume<T>(dims, spacing, affine.offset, direction, std::move(data)));
}

/// Writes a NIfTI-1 file; a `.gz` suffix selects gzip compression. The
/// datatype follows `T`. Output bytes depend only on the volume.
template <typename T>
void write_volume(const Volume<T>& grid, const std::filesystem::path& path) {
  using namespace nifti;
  Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  for (int i = 0; i < 3; ++i) h.dim[i + 1] = static_cast<std::int16_t>(grid.dims()[i]);
  for (int i = 4; i < 8; ++i) h.dim[i] = 1;
  for (auto n : grid.dims()) {
    if (n > 32767) throw UnsupportedError("dimension exceeds NIfTI-1 limit");
  }
  h.datatype = datatype_of<T>();
  h.bitpix = static_cast<std::int16_t>(sizeof(T) * 8);
  const Quaternion q = rotation_to_quaternion(grid.direction());
  h.pixdim[0] = static_cast<float>(q.qfac);
  for (int i = 0; i < 3; ++i) h.pixdim[i + 1] = static_cast<float>(grid.spacing()[i]);
  for (int i = 4; i < 8; ++i) h.pixdim[i] = 1.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.xyzt_units = 2;  // mm
  h.qform_code = 1;
  h.sform_code = 1;
  h.quatern_b = static_cast<float>(q.b);
  h.quatern_c = static_cast<float>(q.c);
  h.quatern_d = static_cast<float>(q.d);
  h.qoffset_x = static_cast<float>(grid.origin().x());
  h.qoffset_y = static_cast<float>(grid.origin().y());
  h.qoffset_z = static_cast<float>(grid.origin().z());
  const Mat3 linear = grid.index_to_world_matrix();
  for (int c = 0; c < 3; ++c) {
    h.srow_x[c] = static_cast<float>(linear(0, c));
    h.srow_y[c] = static_cast<float>(linear(1, c));
    h.srow_z[c] = static_cast<float>(linear(2, c));
  }
  h.srow_x[3] = h.qoffset_x;
  h.srow_y[3] = h.qoffset_y;
  h.srow_z[3] = h.qoffset_z;
  std::memcpy(h.descrip, "xr23d", 5);
  std::memcpy(h.magic, "n+1\0", 4);

  const char* mode = has_gz_suffix(path) ? "wb6" : "wbT";
  GzFile file(gzopen(path.c_str(), mode));
  if (!file.handle) throw IoError("cannot write " + path.string());
  const char extension[4] = {0, 0, 0, 0};
  bool ok = gzwrite(file.handle, &h, sizeof(Header)) == static_cast<int>(sizeof(Header)) &&
            gzwrite(file.handle, extension, 4) == 4;
  const auto* bytes = reinterpret_cast<const unsigned char*>(grid.data().data());
  std::size_t left = grid.size() * sizeof(T);
  while (ok && left > 0) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(left, 1u << 30));
    ok = gzwrite(file.handle, bytes, chunk) == static_cast<int>(chunk);
    bytes += chunk;
    left -= chunk;
  }
  if (!ok) throw IoError("short write to " + path.string());
  const int rc = gzclose(file.handle);
  file.handle = nullptr;
  if (rc != Z_OK) throw IoError("failed to finalize " + path.string());
}

}  // namespace xr23d
