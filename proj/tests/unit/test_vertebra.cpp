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


#include <gtest/gtest.h>

#include "xr23d/morphometry/vertebra.hpp"
#include "xr23d/phantom/vertebra.hpp"

namespace xr23d::morph {
namespace {

using VP = VertebraParam;

const std::map<VP, double> kExpected = {{VP::Vcl, 14},           {VP::BodyHeightAnt, 22}, {VP::BodyHeightPost, 22},
                                        {VP::EndplateWidthSup, 40}, {VP::EndplateDepthSup, 30}, {VP::SpinousLength, 30},
                                        {VP::BodyWidth, 40}};

BinaryMask mirror_x(const BinaryMask& m) {
  BinaryMask out = m.like<std::uint8_t>();
  const auto& d = m.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) out(d[0] - 1 - x, y, z) = m(x, y, z);
  return out;
}

// Quarter turn about z: (x, y) -> (ny - 1 - y, x).
BinaryMask rotate_z90(const BinaryMask& m) {
  const auto& d = m.dims();
  BinaryMask out(Dims{d[1], d[0], d[2]}, Vec3(m.spacing()[1], m.spacing()[0], m.spacing()[2]));
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) out(d[1] - 1 - y, x, z) = m(x, y, z);
  return out;
}

BinaryMask shift(const BinaryMask& m, std::int64_t dx, std::int64_t dy, std::int64_t dz) {
  BinaryMask out = m.like<std::uint8_t>();
  const auto& d = m.dims();
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        const std::int64_t X = x + dx, Y = y + dy, Z = z + dz;
        if (X >= 0 && Y >= 0 && Z >= 0 && X < d[0] && Y < d[1] && Z < d[2]) out(X, Y, Z) = m(x, y, z);
      }
  return out;
}

void expect_params(const VertebraMorphometry& m, double scale, double tol) {
  for (const auto& [p, v] : kExpected) {
    ASSERT_TRUE(m[p]) << param_name(p);
    EXPECT_NEAR(*m[p], scale * v, tol) << param_name(p);
  }
}

TEST(VertebraPartition, CanalAndBody) {
  const auto mask = phantom::make_vertebra_phantom();
  const auto part = segment_vertebral_body(mask);
  EXPECT_NEAR(part.frame.anterior.y(), 1.0, 1e-9);
  EXPECT_NEAR(part.frame.superior.z(), 1.0, 1e-9);
  EXPECT_NEAR(part.frame.origin.x(), 31.5, 1e-9);
  EXPECT_NEAR(part.canal_front_mm + part.canal_back_mm, 14.0, 0.1);
  // Body voxels coincide with the constructed box.
  std::size_t inter = 0, body = 0;
  for (std::int64_t z = 9; z <= 30; ++z)
    for (std::int64_t y = 55; y <= 84; ++y)
      for (std::int64_t x = 12; x <= 51; ++x) ++body, inter += part.body(x, y, z);
  const double overlap = 2.0 * double(inter) / double(body + count_foreground(part.body));
  EXPECT_GE(overlap, 0.95);
  EXPECT_EQ(count_foreground(part.body) + count_foreground(part.posterior), count_foreground(mask));
}

TEST(VertebraPartition, MirrorGivesMirroredPartition) {
  const auto mask = phantom::make_vertebra_phantom();
  const auto a = segment_vertebral_body(mask);
  const auto b = segment_vertebral_body(mirror_x(mask));
  const auto mb = mirror_x(b.body);
  for (std::size_t i = 0; i < mb.size(); ++i) ASSERT_EQ(mb[i], a.body[i]);
}

TEST(VertebraPartition, SolidEllipsoidHasNoCanal) {
  const auto solid = phantom::make_solid_ellipsoid();
  EXPECT_THROW(segment_vertebral_body(solid), PartitionError);
  EXPECT_THROW(segment_vertebral_body(BinaryMask(Dims{8, 8, 8}, Vec3::Ones())), PartitionError);
  const auto m = vertebra_morphometry(solid);
  for (auto p : kVertebraParams) EXPECT_FALSE(m[p]);
  EXPECT_FALSE(m.failure.empty());
  const auto j = to_json(m);
  EXPECT_TRUE(j["vcl_mm"].is_null());
  EXPECT_FALSE(j["flags"]["vcl_valid"].get<bool>());
}

TEST(VertebraMorphometry, PhantomValues) {
  expect_params(vertebra_morphometry(phantom::make_vertebra_phantom()), 1.0, 0.1);
}

TEST(VertebraMorphometry, CanalDepthTracksConstruction) {
  for (std::int64_t ap : {10, 14, 17}) {
    const auto m = vertebra_morphometry(phantom::make_vertebra_phantom({ap, Vec3::Ones()}));
    ASSERT_TRUE(m[VP::Vcl]);
    EXPECT_NEAR(*m[VP::Vcl], double(ap), 1.0);
  }
}

TEST(VertebraMorphometry, SpacingScalesLengths) {
  const auto unit = vertebra_morphometry(phantom::make_vertebra_phantom());
  const auto twice = vertebra_morphometry(phantom::make_vertebra_phantom({14, Vec3::Constant(2.0)}));
  for (auto p : kVertebraParams) {
    ASSERT_TRUE(unit[p] && twice[p]) << param_name(p);
    EXPECT_NEAR(*twice[p], 2.0 * *unit[p], 1e-9) << param_name(p);
  }
}

TEST(VertebraMorphometry, RigidMotionInvariance) {
  const auto mask = phantom::make_vertebra_phantom();
  const auto base = vertebra_morphometry(mask);
  for (const auto& moved : {rotate_z90(mask), shift(mask, 3, -2, 1), mirror_x(mask)}) {
    const auto m = vertebra_morphometry(moved);
    for (auto p : kVertebraParams) {
      ASSERT_TRUE(m[p]) << param_name(p);
      EXPECT_NEAR(*m[p], *base[p], 1.0) << param_name(p);
    }
  }
}

TEST(VertebraMorphometry, Errors) {
  const auto a = vertebra_morphometry(phantom::make_vertebra_phantom({14, Vec3::Ones()}));
  const auto b = vertebra_morphometry(phantom::make_vertebra_phantom({17, Vec3::Ones()}));
  const auto e = morphometry_errors(a, b);
  ASSERT_TRUE(e.at("vcl_mm"));
  EXPECT_NEAR(*e.at("vcl_mm"), 3.0, 0.1);
  const auto self = morphometry_errors(a, a);
  for (const auto& [k, v] : self) EXPECT_EQ(*v, 0.0) << k;
  const auto missing = morphometry_errors(a, vertebra_morphometry(phantom::make_solid_ellipsoid()));
  for (const auto& [k, v] : missing) EXPECT_FALSE(v) << k;
}

}  // namespace
}  // namespace xr23d::morph
