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

#include <Eigen/Geometry>

#include <filesystem>
#include <fstream>

#include "xr23d/core/random.hpp"
#include "xr23d/morphometry/femur.hpp"
#include "xr23d/phantom/femur.hpp"

namespace xr23d::morph {
namespace {

std::vector<Vec3> hemisphere_points(const Vec3& c, double r, int n, Rng* rng = nullptr, double noise = 0.0) {
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    // Fibonacci points on the upper hemisphere.
    const double z = (i + 0.5) / n;
    const double phi = i * M_PI * (3.0 - std::sqrt(5.0));
    const double rho = std::sqrt(1 - z * z);
    const double rr = r + (rng ? uniform_real(*rng, -noise, noise) : 0.0);
    pts.push_back(c + rr * Vec3(rho * std::cos(phi), rho * std::sin(phi), z));
  }
  return pts;
}

BinaryMask cylinder(const Vec3& axis, double radius, std::int64_t n = 64) {
  BinaryMask m(Dims{n, n, n}, Vec3(1, 1, 1));
  const Vec3 c = Vec3::Constant((n - 1) / 2.0), a = axis.normalized();
  for (std::int64_t z = 0; z < n; ++z)
    for (std::int64_t y = 0; y < n; ++y)
      for (std::int64_t x = 0; x < n; ++x) {
        const Vec3 q = Vec3(double(x), double(y), double(z)) - c;
        if ((q - q.dot(a) * a).norm() <= radius) m(x, y, z) = 1;
      }
  return m;
}

TEST(SphereFit, ExactAndNoisyHemisphere) {
  const Vec3 c(10, -5, 3);
  const auto exact = fit_sphere(hemisphere_points(c, 24.0, 400));
  ASSERT_TRUE(exact);
  EXPECT_NEAR(exact->radius, 24.0, 1e-3);
  EXPECT_LE((exact->centre - c).norm(), 1e-3);
  const auto trimmed = fit_sphere_trimmed(hemisphere_points(c, 24.0, 400));
  ASSERT_TRUE(trimmed);
  EXPECT_NEAR(trimmed->sphere.radius, 24.0, 1e-9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto noisy = fit_sphere_trimmed(hemisphere_points(c, 24.0, 400, &rng, 0.5));
    ASSERT_TRUE(noisy);
    EXPECT_NEAR(noisy->sphere.radius, 24.0, 0.5);
  }
  EXPECT_FALSE(fit_sphere({}));
  EXPECT_FALSE(fit_sphere({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)}));
}

TEST(CircleAndLine, Fits) {
  std::vector<Vec2> ring;
  for (int i = 0; i < 12; ++i) ring.emplace_back(3 + 7 * std::cos(i * 0.5), -2 + 7 * std::sin(i * 0.5));
  const auto c = fit_circle(ring);
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->radius, 7.0, 1e-9);
  EXPECT_NEAR(c->centre.x(), 3.0, 1e-9);
  const auto l = fit_line({Vec3(0, 0, 0), Vec3(1, 2, 3), Vec3(2, 4, 6)});
  ASSERT_TRUE(l);
  EXPECT_NEAR(std::abs(l->direction.dot(Vec3(1, 2, 3).normalized())), 1.0, 1e-12);
  EXPECT_THROW(fit_plane({Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2), Vec3(3, 3, 3)}), PlaneError);
  EXPECT_THROW(plane_through(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)), PlaneError);
}

TEST(FemoralHead, VoxelBallAndDegenerateInputs) {
  const auto ball = phantom::make_ball(64, 24.0);
  const auto head = fit_femoral_head(ball);
  ASSERT_TRUE(head);
  EXPECT_NEAR(head->sphere.radius, 24.0, 0.1);
  EXPECT_LE((head->sphere.centre - Vec3::Constant(31.5)).norm(), 0.05);
  EXPECT_FALSE(fit_femoral_head(BinaryMask(Dims{8, 8, 8}, Vec3(1, 1, 1))));
  BinaryMask dot(Dims{8, 8, 8}, Vec3(1, 1, 1));
  dot(4, 4, 4) = 1;
  EXPECT_FALSE(fit_femoral_head(dot));
}

TEST(DiaphysisAxis, VerticalAndTiltedCylinders) {
  FemurLocalization loc;
  loc.axis_point_a_mm = Vec3(31.5, 31.5, 12);
  loc.axis_point_b_mm = Vec3(31.5, 31.5, 52);
  const auto vertical = estimate_diaphysis_axis(cylinder(Vec3::UnitZ(), 12.0), loc);
  ASSERT_TRUE(vertical);
  EXPECT_LT(angle_deg(vertical->direction, Vec3::UnitZ()), 0.5);
  EXPECT_GT(vertical->direction.z(), 0.0);

  const Vec3 tilted = Eigen::AngleAxisd(10.0 * M_PI / 180.0, Vec3::UnitX()) * Vec3::UnitZ();
  const auto t = estimate_diaphysis_axis(cylinder(tilted, 12.0), loc);
  ASSERT_TRUE(t);
  EXPECT_LT(angle_deg(t->direction, tilted), 0.5);

  // Reversed interval flips the orientation.
  std::swap(loc.axis_point_a_mm, loc.axis_point_b_mm);
  EXPECT_LT(angle_deg(estimate_diaphysis_axis(cylinder(tilted, 12.0), loc)->direction, -tilted), 0.5);

  FemurLocalization outside;
  outside.axis_point_a_mm = Vec3(0, 0, 200);
  outside.axis_point_b_mm = Vec3(0, 0, 240);
  EXPECT_FALSE(estimate_diaphysis_axis(cylinder(Vec3::UnitZ(), 12.0), outside));
}

TEST(NeckShaftAngle, Identity) {
  const Vec3 fda = Vec3::UnitZ();
  const Vec3 fna = Eigen::AngleAxisd(55.0 * M_PI / 180.0, Vec3::UnitY()) * fda;
  EXPECT_NEAR(neck_shaft_angle(fna, fda), 125.0, 1e-12);
  EXPECT_EQ(neck_shaft_angle(fda, fda), 180.0);
}

void expect_matches_truth(const FemurMorphometry& m, const FemurMorphometry& truth, double tol_deg = 2.0) {
  ASSERT_TRUE(m.flags.fhr && m.flags.fna && m.flags.fda && m.flags.nsa);
  EXPECT_NEAR(m.fhr, truth.fhr, 0.5);
  EXPECT_NEAR(m.nsa, truth.nsa, tol_deg);
  EXPECT_LE((m.fhc - truth.fhc).norm(), 0.5);
  EXPECT_LT(angle_deg(m.fna, truth.fna), tol_deg);
  EXPECT_LT(angle_deg(m.fda, truth.fda), 0.5);
  EXPECT_FALSE(m.flags.nsa_implausible);
  EXPECT_FALSE(m.flags.fhr_implausible);
}

TEST(FemurPhantom, RecoversConstruction) {
  const auto ph = phantom::make_femur_phantom();
  const auto m = analyze_femur(ph.mask, ph.localization);
  expect_matches_truth(m, ph.truth);
  EXPECT_FALSE(m.flags.fna_transferred);
}

TEST(FemurPhantom, NoisyRecovery) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    phantom::FemurPhantomSpec spec;
    spec.noise_mm = 0.5;
    spec.seed = seed;
    const auto ph = phantom::make_femur_phantom(spec);
    expect_matches_truth(analyze_femur(ph.mask, ph.localization), ph.truth);
  }
}

TEST(FemurPhantom, OtherAnglesAndMirror) {
  for (double nsa : {120.0, 140.0}) {
    phantom::FemurPhantomSpec spec;
    spec.nsa_deg = nsa;
    const auto ph = phantom::make_femur_phantom(spec);
    expect_matches_truth(analyze_femur(ph.mask, ph.localization), ph.truth);
  }
  phantom::FemurPhantomSpec left;
  left.side = phantom::Side::Left;
  const auto r = analyze_femur(phantom::make_femur_phantom().mask, phantom::make_femur_phantom().localization);
  const auto ph = phantom::make_femur_phantom(left);
  const auto l = analyze_femur(ph.mask, ph.localization);
  expect_matches_truth(l, ph.truth);
  // Mirror in x: the x-component of the neck axis flips sign.
  EXPECT_NEAR(l.fna.x(), -r.fna.x(), 1e-6);
  EXPECT_NEAR(l.fna.z(), r.fna.z(), 1e-6);
  EXPECT_NEAR(l.nsa, r.nsa, 1e-6);
}

TEST(FemurPhantom, RigidMotionEquivariance) {
  const Mat3 rots[] = {Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix(),
                       Eigen::AngleAxisd(0.3, Vec3(1, 1, 0).normalized()).toRotationMatrix()};
  const auto base = phantom::make_femur_phantom();
  const auto m0 = analyze_femur(base.mask, base.localization);
  for (const Mat3& r : rots) {
    phantom::FemurPhantomSpec spec;
    spec.rotation = r;
    const auto ph = phantom::make_femur_phantom(spec);
    const auto m = analyze_femur(ph.mask, ph.localization);
    expect_matches_truth(m, ph.truth);
    EXPECT_NEAR(m.fhr, m0.fhr, 0.5);
    EXPECT_NEAR(m.nsa, m0.nsa, 1.0);
    EXPECT_LT(angle_deg(m.fda, r * m0.fda), 1.0);
    EXPECT_LT(angle_deg(m.fna, r * m0.fna), 1.0);
  }
}

TEST(FemurPhantom, DeterministicAndZeroSelfError) {
  const auto ph = phantom::make_femur_phantom();
  const auto a = analyze_femur(ph.mask, ph.localization);
  const auto b = analyze_femur(ph.mask, ph.localization);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  const auto e = femur_errors(a, b);
  EXPECT_EQ(e.fhr_mm, 0.0);
  EXPECT_EQ(e.nsa_deg, 0.0);
  EXPECT_EQ(e.fhc_mm, 0.0);
  EXPECT_EQ(e.fna_deg, 0.0);
  EXPECT_EQ(e.fda_deg, 0.0);
}

TEST(FemurPhantom, SphereOnlyHasNoNeck) {
  const auto ball = phantom::make_ball(80, 24.0);
  const auto neck = estimate_neck_axis(ball, Vec3::Constant(39.5), 24.0);
  EXPECT_FALSE(neck);
  const auto m = analyze_femur(ball);
  EXPECT_TRUE(m.flags.fhr);
  EXPECT_FALSE(m.flags.fna);
  EXPECT_FALSE(m.flags.fda);
  EXPECT_FALSE(m.flags.nsa);
  EXPECT_TRUE(std::isnan(femur_errors(m, m).nsa_deg));

  // Transferred isthmus supplies the neck axis.
  FemurLocalization loc;
  loc.axis_point_a_mm = Vec3(0, 0, 0);
  loc.axis_point_b_mm = Vec3(0, 0, 1);
  loc.isthmus_centre_mm = Vec3(39.5, 39.5, 39.5) + Vec3(30, 0, 0);
  const auto t = analyze_femur(ball, loc);
  EXPECT_TRUE(t.flags.fna);
  EXPECT_TRUE(t.flags.fna_transferred);
  EXPECT_LT(angle_deg(t.fna, -Vec3::UnitX()), 0.5);
}

TEST(FemurPhantom, EmptyMaskAllInvalid) {
  const auto m = analyze_femur(BinaryMask(Dims{4, 4, 4}, Vec3(1, 1, 1)));
  EXPECT_FALSE(m.flags.fhr || m.flags.fna || m.flags.fda || m.flags.nsa);
  EXPECT_TRUE(to_json(m)["fhr_mm"].is_null());
}

TEST(Localization, SidecarRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "xr23d_loc_test.json";
  const auto ph = phantom::make_femur_phantom();
  nlohmann::ordered_json j;
  j["case-1"] = to_json(ph.localization);
  std::ofstream(path) << j.dump(2);
  const auto back = read_localizations(path);
  ASSERT_EQ(back.count("case-1"), 1u);
  EXPECT_EQ(back.at("case-1").axis_point_b_mm, ph.localization.axis_point_b_mm);
  EXPECT_TRUE(back.at("case-1").isthmus_centre_mm);
  std::ofstream(path) << "{\"x\": {\"axis_point_a_mm\": [0,0,0], \"axis_point_b_mm\": [0,0,0]}}";
  EXPECT_THROW(read_localizations(path), FormatError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace xr23d::morph
