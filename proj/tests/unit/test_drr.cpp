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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "xr23d/core/random.hpp"
#include "xr23d/drr/image_io.hpp"
#include "xr23d/drr/projection.hpp"

namespace xr23d::drr {
namespace {

double rms(const DrrImage& a, const DrrImage& b) {
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.cols, b.cols);
  double s = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) s += (a.pixels[i] - b.pixels[i]) * (a.pixels[i] - b.pixels[i]);
  return std::sqrt(s / double(a.pixels.size()));
}

std::int64_t count_nonzero(const DrrImage& img) {
  std::int64_t n = 0;
  for (double p : img.pixels) n += p != 0.0;
  return n;
}

ProjectionSpec spec_of(View v, double angle = 90.0, IntensityMode m = IntensityMode::Mean) {
  ProjectionSpec s;
  s.view = v;
  s.lat_angle_deg = angle;
  s.intensity = m;
  return s;
}

VoxelGrid smooth_random(Rng& rng, std::int64_t n) {
  VoxelGrid v(Dims{n, n, n}, Vec3(1, 1, 1), Vec3::Zero(), Mat3::Identity(), -1000.0f);
  for (int b = 0; b < 6; ++b) {
    const Vec3 c(uniform_real(rng, 3, n - 4.0), uniform_real(rng, 3, n - 4.0), uniform_real(rng, 3, n - 4.0));
    const double r = uniform_real(rng, 2.0, 4.0), hu = uniform_real(rng, 200, 1500);
    for (std::int64_t z = 0; z < n; ++z)
      for (std::int64_t y = 0; y < n; ++y)
        for (std::int64_t x = 0; x < n; ++x) {
          const double d2 = (Vec3(double(x), double(y), double(z)) - c).squaredNorm();
          v(x, y, z) += static_cast<float>(hu * std::exp(-d2 / (2 * r * r)));
        }
  }
  return v;
}

TEST(Projection, SingleVoxelGivesSinglePixel) {
  for (auto mode : {IntensityMode::Mean, IntensityMode::Sum}) {
    VoxelGrid v(Dims{9, 7, 5}, Vec3(1, 1, 1), Vec3::Zero(), Mat3::Identity(), -1000.0f);
    v(2, 4, 1) = 1200.0f;
    const auto ap = project(v, spec_of(View::AP, 90, mode));
    EXPECT_EQ(ap.rows, 5);
    EXPECT_EQ(ap.cols, 9);
    EXPECT_EQ(count_nonzero(ap), 1);
    // Superior row at the top, patient right (low x) on the image right.
    EXPECT_EQ(ap.at(5 - 1 - 1, 9 - 1 - 2), 1.0);

    const auto lat = project(v, spec_of(View::LAT, 90, mode));
    EXPECT_EQ(count_nonzero(lat), 1);
    // Lateral axis is +y; the 7-voxel y extent sits centred in 9 columns.
    EXPECT_EQ(lat.at(3, 9 - 1 - (4 + 1)), 1.0);
  }
}

TEST(Projection, SingleVoxelAnisotropicSpacing) {
  VoxelGrid v(Dims{6, 6, 4}, Vec3(0.5, 1.0, 2.0), Vec3::Zero(), Mat3::Identity(), -1000.0f);
  v(1, 2, 3) = 500.0f;
  const auto ap = project(v, spec_of(View::AP, 90, IntensityMode::Sum));
  EXPECT_EQ(ap.row_spacing, 2.0);
  EXPECT_EQ(ap.col_spacing, 0.5);
  EXPECT_EQ(count_nonzero(ap), 1);
  const std::int64_t cols = ap.cols, offset = (cols - 6) / 2;
  EXPECT_EQ(ap.at(0, cols - 1 - (1 + offset)), 1.0);
}

TEST(Projection, UniformCubeChordLengths) {
  const double hu = 1000.0, mu = attenuation(hu, -1000, 2000);
  VoxelGrid v(Dims{20, 20, 6}, Vec3(1, 1, 1), Vec3::Zero(), Mat3::Identity(), -1000.0f);
  for (std::int64_t z = 0; z < 6; ++z)
    for (std::int64_t y = 5; y < 15; ++y)
      for (std::int64_t x = 5; x < 15; ++x) v(x, y, z) = float(hu);
  auto s = spec_of(View::AP, 90, IntensityMode::Sum);
  s.hu_lo = -1000;
  const auto ap = project_raw(v, s);
  // Background contributes zero attenuation, so each ray through the cube integrates mu * 10 mm.
  for (std::int64_t c = 5; c < 15; ++c) EXPECT_NEAR(ap.at(3, 19 - c), mu * 10.0, 1e-6);
  EXPECT_EQ(ap.at(3, 0), 0.0);

  // At 45 degrees the central chord is the diagonal, shortened by at most one voxel
  // of interpolated corner; off-centre chords are strictly shorter.
  const auto oblique = project_raw(v, spec_of(View::LAT, 45, IntensityMode::Sum));
  std::int64_t best = 0;
  for (std::int64_t c = 0; c < oblique.cols; ++c)
    if (oblique.at(3, c) > oblique.at(3, best)) best = c;
  EXPECT_NEAR(oblique.at(3, best), mu * 10.0 * std::sqrt(2.0), mu * std::sqrt(2.0));
  for (std::int64_t k = 3; k < 7; ++k) {
    EXPECT_LT(oblique.at(3, best + k), oblique.at(3, best + k - 2));
    EXPECT_LT(oblique.at(3, best - k), oblique.at(3, best - k + 2));
  }
}

TEST(Projection, RotatedVolumeLat90MatchesAp) {
  Rng rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    const std::int64_t n = 16;
    const auto v = smooth_random(rng, n);
    VoxelGrid rotated = v.like<float>();
    // Quarter turn about the superior axis.
    for (std::int64_t k = 0; k < n; ++k)
      for (std::int64_t j = 0; j < n; ++j)
        for (std::int64_t i = 0; i < n; ++i) rotated(i, j, k) = v(j, n - 1 - i, k);
    for (auto mode : {IntensityMode::Mean, IntensityMode::Sum}) {
      const auto ap = project(v, spec_of(View::AP, 90, mode));
      const auto lat = project(rotated, spec_of(View::LAT, 90, mode));
      EXPECT_LE(rms(ap, lat), 1e-3);
    }
  }
}

TEST(Projection, RotationallySymmetricPhantomIsAngleInvariant) {
  const std::int64_t n = 48;
  VoxelGrid v(Dims{n, n, 8}, Vec3(1, 1, 1), Vec3::Zero(), Mat3::Identity(), -1000.0f);
  const double c = (n - 1) / 2.0;
  for (std::int64_t z = 0; z < 8; ++z)
    for (std::int64_t y = 0; y < n; ++y)
      for (std::int64_t x = 0; x < n; ++x) {
        // Smooth bump with compact support inside the inscribed circle.
        const double q = std::max(0.0, 1.0 - ((x - c) * (x - c) + (y - c) * (y - c)) / (20.0 * 20.0));
        v(x, y, z) = float(-1000.0 + 2500.0 * q * q * q);
      }
  for (auto mode : {IntensityMode::Mean, IntensityMode::Sum}) {
    const auto reference = project(v, spec_of(View::LAT, 90, mode));
    for (double a : {92.0, 94.0, 96.0, 98.0, 100.0, 91.0, 45.0, 137.5}) {
      EXPECT_LE(rms(project(v, spec_of(View::LAT, a, mode)), reference), 1e-3) << a;
    }
    EXPECT_LE(rms(project(v, spec_of(View::AP, 90, mode)), reference), 1e-3);
  }
}

TEST(Projection, LinearityInSumMode) {
  Rng rng(6);
  const auto v = smooth_random(rng, 12);
  auto s = spec_of(View::LAT, 97, IntensityMode::Sum);
  s.hu_lo = -2000;
  s.hu_hi = 1e7;
  // With the window wide open attenuation is affine in HU; shift so zero HU maps to zero.
  VoxelGrid shifted = v.like<float>();
  for (std::size_t i = 0; i < v.size(); ++i) shifted[i] = v[i] + 2000.0f;
  s.hu_lo = 0;
  for (double a : {0.5, 2.0, 3.7}) {
    VoxelGrid scaled = shifted.like<float>();
    for (std::size_t i = 0; i < v.size(); ++i) scaled[i] = float(a * shifted[i]);
    const auto base = project_raw(shifted, s), out = project_raw(scaled, s);
    for (std::size_t i = 0; i < base.pixels.size(); ++i)
      EXPECT_NEAR(out.pixels[i], a * base.pixels[i], 1e-6 * (1 + std::abs(a * base.pixels[i])));
  }
}

TEST(Projection, TranslationShiftsColumns) {
  Rng rng(7);
  const std::int64_t n = 20, k = 3;
  VoxelGrid v(Dims{n, n, 6}, Vec3(1, 1, 1), Vec3::Zero(), Mat3::Identity(), -1000.0f);
  for (std::int64_t z = 0; z < 6; ++z)
    for (std::int64_t y = 4; y < 14; ++y)
      for (std::int64_t x = 2; x < 12; ++x) v(x, y, z) = float(uniform_real(rng, -500, 1500));
  VoxelGrid sx = v.like<float>(-1000.0f), sy = v.like<float>(-1000.0f);
  for (std::int64_t z = 0; z < 6; ++z)
    for (std::int64_t y = 0; y + k < n; ++y)
      for (std::int64_t x = 0; x + k < n; ++x) {
        sx(x + k, y, z) = v(x, y, z);
        sy(x, y + k, z) = v(x, y, z);
      }
  const auto spec_ap = spec_of(View::AP, 90, IntensityMode::Sum);
  const auto ap = project_raw(v, spec_ap), ap_shift = project_raw(sx, spec_ap);
  const auto spec_lat = spec_of(View::LAT, 90, IntensityMode::Sum);
  const auto lat = project_raw(v, spec_lat), lat_shift = project_raw(sy, spec_lat);
  for (std::int64_t r = 0; r < ap.rows; ++r)
    for (std::int64_t c = k; c < ap.cols; ++c) {
      // +x moves toward the image left.
      EXPECT_EQ(ap_shift.at(r, c - k), ap.at(r, c));
      EXPECT_EQ(lat_shift.at(r, c - k), lat.at(r, c));
    }
}

TEST(Projection, OutputRangeAndConstantGuard) {
  VoxelGrid zero(Dims{6, 6, 6}, Vec3(1, 1, 1));
  VoxelGrid constant(Dims{6, 6, 6}, Vec3(1, 1, 1), Vec3::Zero(), Mat3::Identity(), 700.0f);
  for (const auto* v : {&zero, &constant})
    for (auto mode : {IntensityMode::Mean, IntensityMode::Sum}) {
      // Sum mode along axis-aligned rays is constant too; mean mode has uniform support.
      const auto img = project(*v, spec_of(View::AP, 90, mode));
      for (double p : img.pixels) EXPECT_EQ(p, 0.0);
    }
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    const auto v = smooth_random(rng, 10);
    const auto img = project(v, spec_of(View::LAT, uniform_real(rng, 1, 179), IntensityMode::Sum));
    const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    EXPECT_EQ(*lo, 0.0);
    EXPECT_EQ(*hi, 1.0);
    for (double p : img.pixels) EXPECT_TRUE(std::isfinite(p));
  }
}

TEST(Projection, ThreadCountInvariant) {
  Rng rng(9);
  const auto v = smooth_random(rng, 14);
  const auto a = project(v, spec_of(View::LAT, 95), 1);
  const auto b = project(v, spec_of(View::LAT, 95), 4);
  EXPECT_EQ(a.pixels, b.pixels);
}

TEST(Projection, OutputSizeSetsPixelSpacing) {
  VoxelGrid v(Dims{8, 8, 8}, Vec3(1, 1, 1), Vec3::Zero(), Mat3::Identity(), -1000.0f);
  auto s = spec_of(View::AP);
  s.output_size = std::make_pair(std::int64_t(16), std::int64_t(4));
  const auto img = project(v, s);
  EXPECT_EQ(img.rows, 16);
  EXPECT_EQ(img.cols, 4);
  EXPECT_EQ(img.row_spacing, 0.5);
  EXPECT_EQ(img.col_spacing, 2.0);
}

TEST(Projection, InvalidSpecsRejected) {
  VoxelGrid v(Dims{4, 4, 4}, Vec3(1, 1, 1));
  auto s = spec_of(View::LAT, 0.0);
  EXPECT_THROW(project(v, s), ConfigError);
  s.lat_angle_deg = 180.0;
  EXPECT_THROW(project(v, s), ConfigError);
  s.lat_angle_deg = 90.0;
  s.hu_lo = s.hu_hi = 5.0;
  EXPECT_THROW(project(v, s), ConfigError);
  s = spec_of(View::AP);
  s.output_size = std::make_pair(std::int64_t(0), std::int64_t(4));
  EXPECT_THROW(project(v, s), ConfigError);
  EXPECT_THROW(intensity_mode_from_string("max"), ConfigError);
  EXPECT_THROW(misalignment_series(v, {}), ConfigError);
}

TEST(Biplanar, ApFixedLatVaries) {
  Rng rng(11);
  const auto v = smooth_random(rng, 16);
  const auto p90 = make_biplanar(v, 90.0);
  const auto p100 = make_biplanar(v, 100.0);
  EXPECT_EQ(p90.ap.pixels, p100.ap.pixels);
  EXPECT_NE(p90.lat.pixels, p100.lat.pixels);
  EXPECT_EQ(p90.ap.row_spacing, p90.lat.row_spacing);
  EXPECT_EQ(p90.ap.col_spacing, p90.lat.col_spacing);
}

TEST(Biplanar, MisalignmentSeries) {
  Rng rng(12);
  const auto v = smooth_random(rng, 12);
  const auto series = misalignment_series(v, default_misalignment_angles());
  ASSERT_EQ(series.size(), 5u);
  const double expected[] = {92, 94, 96, 98, 100};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(series[i].lat_angle_deg, expected[i]);
    EXPECT_GT(series[i].lat_angle_deg, 91.0 - 1e-12);
    EXPECT_LE(series[i].lat_angle_deg, 100.0);
    EXPECT_EQ(series[i].ap.pixels, series[0].ap.pixels);
  }
  const auto single = misalignment_series(v, {90.0});
  const auto pair = make_biplanar(v, 90.0);
  EXPECT_EQ(single[0].lat.pixels, pair.lat.pixels);
  const auto dup = misalignment_series(v, {95.0, 95.0});
  EXPECT_EQ(dup[0].lat.pixels, dup[1].lat.pixels);
}

class ImageIo : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("xr23d_drr_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  static std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  std::filesystem::path dir_;
};

TEST_F(ImageIo, PgmRoundTripAndDeterminism) {
  Rng rng(1);
  const auto img = project(smooth_random(rng, 10), spec_of(View::LAT, 93));
  write_pgm16(img, dir_ / "a.pgm");
  write_pgm16(img, dir_ / "b.pgm");
  EXPECT_EQ(slurp(dir_ / "a.pgm"), slurp(dir_ / "b.pgm"));
  const auto back = read_pgm16(dir_ / "a.pgm");
  ASSERT_EQ(back.rows, img.rows);
  ASSERT_EQ(back.cols, img.cols);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    EXPECT_NEAR(back.pixels[i] / 65535.0, img.pixels[i], 0.5 / 65535.0 + 1e-12);
  EXPECT_EQ(slurp(dir_ / "a.pgm").substr(0, 3), "P5\n");
  std::ofstream(dir_ / "bad.pgm") << "P2\n1 1\n255\n0\n";
  EXPECT_THROW(read_pgm16(dir_ / "bad.pgm"), FormatError);
  EXPECT_THROW(read_pgm16(dir_ / "missing.pgm"), IoError);
}

TEST_F(ImageIo, PngAndSidecar) {
  Rng rng(2);
  const auto img = project(smooth_random(rng, 10), spec_of(View::AP));
  write_png8(img, dir_ / "a.png");
  write_png8(img, dir_ / "b.png");
  const auto bytes = slurp(dir_ / "a.png");
  EXPECT_EQ(bytes, slurp(dir_ / "b.png"));
  EXPECT_EQ(bytes.substr(1, 3), "PNG");
  write_sidecar(img, dir_ / "a.json");
  const auto j = nlohmann::json::parse(slurp(dir_ / "a.json"));
  EXPECT_EQ(j["view"], "AP");
  EXPECT_EQ(j["intensity"], "mean");
  EXPECT_EQ(j["hu_window"][0], -1000.0);
  EXPECT_EQ(j["output_size"][1], img.cols);
}

}  // namespace
}  // namespace xr23d::drr
