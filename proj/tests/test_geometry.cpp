#include <doctest.h>

#include <random>

#include "mvcalib/geometry.hpp"
#include "test_support.hpp"

using namespace mvcalib;

TEST_SUITE("geometry") {

TEST_CASE("project: identity pose") {
  const CameraPose pose;
  const NormalizedPoint p = project(pose, WorldPoint(0, 0, 5));
  CHECK(p.u == 0.0);
  CHECK(p.v == 0.0);

  const NormalizedPoint q = project(pose, WorldPoint(1, 2, 2));
  CHECK(q.u == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(q.v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("project: rotated pose with offset center") {
  // R(X - T) = R_z(90deg) * (0, 0, 4) = (0, 0, 4)
  CameraPose pose;
  pose.R = test_support::rotation_about(Vec3::UnitZ(), std::numbers::pi / 2.0);
  pose.T = Vec3(1, 0, 0);
  const NormalizedPoint p = project(pose, WorldPoint(1, 0, 4));
  CHECK(std::abs(p.u) < 1e-15);
  CHECK(std::abs(p.v) < 1e-15);
}

TEST_CASE("project: non-positive depth throws") {
  const CameraPose pose;
  CHECK_THROWS_AS(project(pose, WorldPoint(0, 0, -1)), PointBehindCamera);
  CHECK_THROWS_AS(project(pose, WorldPoint(1, 1, 0)), PointBehindCamera);
}

TEST_CASE("project: scale invariance of the homogeneous camera point") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    CameraPose pose;
    pose.R = test_support::random_rotation(rng);
    pose.T = Vec3::Random();
    WorldPoint X = pose.T + pose.R.transpose() * Vec3(0.3, -0.2, 4.0);
    const NormalizedPoint a = project(pose, X);
    // moving the point along the viewing ray leaves the projection fixed
    const WorldPoint X2 = pose.T + 2.5 * (X - pose.T);
    const NormalizedPoint b = project(pose, X2);
    CHECK(std::abs(a.u - b.u) < 1e-12);
    CHECK(std::abs(a.v - b.v) < 1e-12);
  }
}

TEST_CASE("undistort_normalize: principal point maps to the origin") {
  CameraIntrinsics intr;
  intr.fx = 700;
  intr.fy = 650;
  intr.cx = 320;
  intr.cy = 240;
  intr.k1 = -0.3;
  intr.k2 = 0.1;
  intr.p1 = 1e-3;
  intr.p2 = -2e-3;
  const NormalizedPoint p = undistort_normalize(Vec2(320, 240), intr);
  CHECK(std::abs(p.u) < 1e-12);
  CHECK(std::abs(p.v) < 1e-12);
}

TEST_CASE("undistort_normalize: zero distortion is exactly K^-1") {
  CameraIntrinsics intr;
  intr.fx = 700;
  intr.fy = 650;
  intr.cx = 320;
  intr.cy = 240;
  const NormalizedPoint p = undistort_normalize(Vec2(320 + 700, 240), intr);
  CHECK(p.u == 1.0);
  CHECK(p.v == 0.0);
}

TEST_CASE("undistort_normalize: inverts a hand-computed distortion") {
  CameraIntrinsics intr;
  intr.fx = 700;
  intr.fy = 700;
  intr.cx = 320;
  intr.cy = 240;
  intr.k1 = -0.1;

  // forward Brown-Conrady model written out independently
  const double x = 0.3, y = 0.2;
  const double r2 = x * x + y * y;
  const double radial = 1.0 + intr.k1 * r2;
  const double xd = x * radial;
  const double yd = y * radial;
  const Vec2 pixel(intr.fx * xd + intr.cx, intr.fy * yd + intr.cy);

  const NormalizedPoint p = undistort_normalize(pixel, intr);
  CHECK(std::abs(p.u - 0.3) < 1e-9);
  CHECK(std::abs(p.v - 0.2) < 1e-9);
}

TEST_CASE("undistort_normalize: inverse-composition property") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uc(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    CameraIntrinsics intr;
    intr.fx = 600 + 200 * uc(rng);
    intr.fy = 600 + 200 * uc(rng);
    intr.cx = 320 + 10 * uc(rng);
    intr.cy = 240 + 10 * uc(rng);
    intr.skew = 0.5 * uc(rng);
    intr.k1 = 0.2 * uc(rng);
    intr.k2 = 0.05 * uc(rng);
    intr.p1 = 0.01 * uc(rng);
    intr.p2 = 0.01 * uc(rng);

    // normalized radius <= 0.5
    Vec2 n(uc(rng), uc(rng));
    if (n.norm() > 1e-9) n = n.normalized() * 0.5 * std::abs(uc(rng));
    const NormalizedPoint original{n.x(), n.y()};

    const Vec2 pixel = normalized_to_pixel(original, intr);
    const NormalizedPoint back = undistort_normalize(pixel, intr);
    CHECK(std::abs(back.u - original.u) < 1e-9);
    CHECK(std::abs(back.v - original.v) < 1e-9);
  }
}

TEST_CASE("undistort_normalize: divergence raises NoConvergence") {
  CameraIntrinsics intr;
  intr.fx = 700;
  intr.fy = 700;
  intr.cx = 320;
  intr.cy = 240;
  intr.k1 = -0.4;
  // far outside the calibrated field: the radial factor turns negative
  CHECK_THROWS_AS(undistort_normalize(Vec2(320 + 2 * 700, 240), intr), NoConvergence);
}

TEST_CASE("compose_relative: self-relative pose is the identity") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    CameraPose pose;
    pose.R = test_support::random_rotation(rng);
    pose.T = 5.0 * Vec3::Random();
    const CameraPose rel = compose_relative(pose, pose);
    CHECK((rel.R - Mat3::Identity()).norm() < 1e-12);
    CHECK(rel.T.norm() < 1e-12);
  }
}

TEST_CASE("compose_relative: identity reference returns the pose itself") {
  std::mt19937_64 rng(4);
  CameraPose pose;
  pose.R = test_support::random_rotation(rng);
  pose.T = Vec3(0.4, -2.0, 1.0);
  const CameraPose rel = compose_relative(CameraPose{}, pose);
  CHECK((rel.R - pose.R).norm() < 1e-15);
  CHECK((rel.T - pose.T).norm() < 1e-15);
}

TEST_CASE("compose_relative: projection consistency on a shared point") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    CameraPose a, b;
    a.R = test_support::random_rotation(rng);
    a.T = Vec3::Random();
    b.R = test_support::random_rotation(rng);
    b.T = Vec3::Random();

    // a point well in front of camera b, also visible from a's frame
    const WorldPoint X = b.T + b.R.transpose() * Vec3(0.2, -0.1, 6.0);
    if ((a.R * (X - a.T)).z() <= 0.1) continue;

    const NormalizedPoint direct = project(b, X);
    const CameraPose rel = compose_relative(a, b);
    const Vec3 Xa = a.camera_frame(X);
    const NormalizedPoint chained = project(rel, Xa);
    CHECK(std::abs(direct.u - chained.u) < 1e-12);
    CHECK(std::abs(direct.v - chained.v) < 1e-12);
  }
}

TEST_CASE("intrinsics matrix shape") {
  CameraIntrinsics intr;
  intr.fx = 2;
  intr.fy = 3;
  intr.cx = 4;
  intr.cy = 5;
  intr.skew = 0.5;
  const Mat3 K = intr.matrix();
  CHECK(K(0, 0) == 2);
  CHECK(K(1, 1) == 3);
  CHECK(K(0, 2) == 4);
  CHECK(K(1, 2) == 5);
  CHECK(K(0, 1) == 0.5);
  CHECK(K(1, 0) == 0);
  CHECK(K(2, 0) == 0);
  CHECK(K(2, 1) == 0);
  CHECK(K(2, 2) == 1);
}

}  // TEST_SUITE
