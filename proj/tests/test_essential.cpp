#include <doctest.h>

#include <Eigen/SVD>

#include <random>

#include "mvcalib/essential.hpp"
#include "test_support.hpp"

using namespace mvcalib;
namespace ts = test_support;

namespace {

std::array<Correspondence2D2D, 5> first_five(const std::vector<Correspondence2D2D>& matches) {
  std::array<Correspondence2D2D, 5> sample;
  for (int i = 0; i < 5; ++i) sample[i] = matches[i];
  return sample;
}

}  // namespace

TEST_SUITE("essential") {

TEST_CASE("solve_essential_5pt: pure translation along x") {
  std::mt19937_64 rng(101);
  CameraPose pose2;
  pose2.T = Vec3(1, 0, 0);

  std::vector<Correspondence2D2D> matches;
  while (matches.size() < 5) {
    const WorldPoint X = ts::random_point_in_frustum(rng);
    if (!ts::in_front(CameraPose{}, X) || !ts::in_front(pose2, X)) continue;
    matches.push_back(Correspondence2D2D{ts::observe(CameraPose{}, X), ts::observe(pose2, X)});
  }

  const auto candidates = solve_essential_5pt(first_five(matches));
  REQUIRE(!candidates.empty());

  const Mat3 expected = skew(Vec3(1, 0, 0)) / skew(Vec3(1, 0, 0)).norm();
  double best = 1e9;
  for (const auto& E : candidates) best = std::min(best, ts::essential_distance(E.m, expected));
  CHECK(best < 1e-6);
}

TEST_CASE("solve_essential_5pt: ground truth among candidates on random instances") {
  std::mt19937_64 rng(202);
  int misses = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto inst = ts::random_relative_instance(rng, 5);
    const Mat3 gt = ts::oracle_essential(inst.pose2);

    const auto candidates = solve_essential_5pt(first_five(inst.matches));
    double best = 1e9;
    for (const auto& E : candidates) best = std::min(best, ts::essential_distance(E.m, gt));
    if (best >= 1e-6) ++misses;
  }
  CHECK(misses == 0);
}

TEST_CASE("solve_essential_5pt: every candidate satisfies the matrix invariants") {
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = ts::random_relative_instance(rng, 5);
    for (const auto& E : solve_essential_5pt(first_five(inst.matches))) {
      CHECK(std::abs(E.m.norm() - 1.0) < 1e-12);
      CHECK(std::abs(E.m.determinant()) < 1e-8);
      Eigen::JacobiSVD<Mat3> svd(E.m);
      CHECK(std::abs(svd.singularValues()(0) - svd.singularValues()(1)) < 1e-6);
      CHECK(svd.singularValues()(2) < 1e-6);
      const Mat3 tr = 2.0 * E.m * E.m.transpose() * E.m -
                      (E.m * E.m.transpose()).trace() * E.m;
      CHECK(tr.cwiseAbs().maxCoeff() < 1e-6);
      // epipolar residuals of the sample itself
      for (int i = 0; i < 5; ++i) {
        CHECK(std::abs(inst.matches[i].b.ray().dot(E.m * inst.matches[i].a.ray())) < 1e-8);
      }
    }
  }
}

TEST_CASE("solve_essential_5pt: coplanar points are not degenerate") {
  std::mt19937_64 rng(404);
  int misses = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = ts::random_planar_instance(rng, 5);
    const Mat3 gt = ts::oracle_essential(inst.pose2);
    double best = 1e9;
    for (const auto& E : solve_essential_5pt(first_five(inst.matches))) {
      best = std::min(best, ts::essential_distance(E.m, gt));
    }
    if (best >= 1e-6) ++misses;
  }
  CHECK(misses == 0);
}

TEST_CASE("solve_essential_5pt: duplicate pair raises DegenerateSample") {
  std::mt19937_64 rng(505);
  const auto inst = ts::random_relative_instance(rng, 5);
  auto sample = first_five(inst.matches);
  sample[4] = sample[0];
  CHECK_THROWS_AS(solve_essential_5pt(sample), DegenerateSample);
}

TEST_CASE("decompose_essential: pure translation scene") {
  std::mt19937_64 rng(606);
  CameraPose pose2;
  pose2.T = Vec3(1, 0, 0);

  std::vector<Correspondence2D2D> inliers;
  while (inliers.size() < 20) {
    const WorldPoint X = ts::random_point_in_frustum(rng);
    if (!ts::in_front(CameraPose{}, X) || !ts::in_front(pose2, X)) continue;
    inliers.push_back(Correspondence2D2D{ts::observe(CameraPose{}, X), ts::observe(pose2, X)});
  }

  const EssentialMatrix E{skew(Vec3(1, 0, 0))};
  const RelativePose pose = decompose_essential(E.normalized(), inliers);
  CHECK((pose.R - Mat3::Identity()).norm() < 1e-9);
  CHECK((pose.T - Vec3(1, 0, 0)).norm() < 1e-9);
}

TEST_CASE("decompose_essential: recovers random synthetic poses") {
  std::mt19937_64 rng(707);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = ts::random_relative_instance(rng, 20);
    const EssentialMatrix E{ts::oracle_essential(inst.pose2)};
    const RelativePose pose = decompose_essential(E, inst.matches);
    CHECK((pose.R - inst.pose2.R).norm() < 1e-9);
    CHECK((pose.T - inst.pose2.T.normalized()).norm() < 1e-9);
    CHECK(std::abs(pose.T.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("decompose_essential: identical rays give no cheirality majority") {
  // correspondences with a == b satisfy any [t]_x constraint yet carry no
  // parallax, so no factorization can triangulate positive depths
  std::vector<Correspondence2D2D> inliers;
  inliers.push_back({NormalizedPoint{0.3, 0.2}, NormalizedPoint{0.3, 0.2}});
  inliers.push_back({NormalizedPoint{-0.1, 0.4}, NormalizedPoint{-0.1, 0.4}});
  inliers.push_back({NormalizedPoint{0.0, -0.3}, NormalizedPoint{0.0, -0.3}});
  inliers.push_back({NormalizedPoint{0.2, 0.1}, NormalizedPoint{0.2, 0.1}});

  const EssentialMatrix E{skew(Vec3(1, 0, 0))};
  CHECK_THROWS_AS(decompose_essential(E.normalized(), inliers), AmbiguousCheirality);
}

TEST_CASE("sampson_error: zero exactly on the constraint") {
  std::mt19937_64 rng(808);
  const auto inst = ts::random_relative_instance(rng, 10);
  const EssentialMatrix E{ts::oracle_essential(inst.pose2)};
  for (const auto& m : inst.matches) {
    CHECK(sampson_error(E, m) < 1e-12);
  }
}

TEST_CASE("sampson_error: positive under perturbation") {
  std::mt19937_64 rng(909);
  const auto inst = ts::random_relative_instance(rng, 5);
  const EssentialMatrix E{ts::oracle_essential(inst.pose2)};
  Correspondence2D2D noisy = inst.matches[0];
  noisy.b.u += 1e-3;
  CHECK(sampson_error(E, noisy) > 0.0);
}

TEST_CASE("sampson_error: matches the direct formula") {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Mat3 M;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) M(r, c) = u(rng);
    }
    const EssentialMatrix E = EssentialMatrix{M}.normalized();
    const Correspondence2D2D corr{NormalizedPoint{u(rng), u(rng)},
                                  NormalizedPoint{u(rng), u(rng)}};

    const Vec3 a(corr.a.u, corr.a.v, 1.0);
    const Vec3 b(corr.b.u, corr.b.v, 1.0);
    const double num = b.transpose() * E.m * a;
    const Vec3 Ea = E.m * a;
    const Vec3 Etb = E.m.transpose() * b;
    const double expected =
        num * num / (Ea.x() * Ea.x() + Ea.y() * Ea.y() + Etb.x() * Etb.x() + Etb.y() * Etb.y());
    CHECK(sampson_error(E, corr) == doctest::Approx(expected).epsilon(1e-12));
  }
}

}  // TEST_SUITE
