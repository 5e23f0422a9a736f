#pragma once

#include <array>
#include <random>
#include <vector>

#include "mvcalib/essential.hpp"
#include "mvcalib/geometry.hpp"
#include "mvcalib/p3p.hpp"

// Synthetic-instance generators shared by the oracle suites. Everything is
// driven by an explicit engine so failures reproduce from a seed.
namespace test_support {

using mvcalib::CameraPose;
using mvcalib::Correspondence2D2D;
using mvcalib::Correspondence2D3D;
using mvcalib::Mat3;
using mvcalib::NormalizedPoint;
using mvcalib::Vec3;
using mvcalib::WorldPoint;

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  while (q.norm() < 1e-6) q = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng));
  return q.normalized().toRotationMatrix();
}

inline Mat3 rotation_about(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

inline NormalizedPoint observe(const CameraPose& pose, const WorldPoint& X) {
  const Vec3 y = pose.R * (X - pose.T);
  return NormalizedPoint{y.x() / y.z(), y.y() / y.z()};
}

inline bool in_front(const CameraPose& pose, const WorldPoint& X) {
  return (pose.R * (X - pose.T)).z() > 0.2;
}

// Camera 1 at identity; camera 2 with a bounded rotation and baseline so
// that points drawn in front of camera 1 usually stay visible in both.
inline CameraPose random_second_camera(std::mt19937_64& rng, double max_angle_deg = 20.0,
                                       double baseline = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> ua(0.0, max_angle_deg * std::numbers::pi / 180.0);
  Vec3 axis(u(rng), u(rng), u(rng));
  while (axis.norm() < 1e-3) axis = Vec3(u(rng), u(rng), u(rng));
  Vec3 t(u(rng), u(rng), u(rng));
  while (t.norm() < 1e-3) t = Vec3(u(rng), u(rng), u(rng));
  CameraPose pose;
  pose.R = rotation_about(axis, ua(rng));
  pose.T = baseline * t.normalized();
  return pose;
}

inline WorldPoint random_point_in_frustum(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uxy(-2.0, 2.0);
  std::uniform_real_distribution<double> uz(4.0, 8.0);
  return WorldPoint(uxy(rng), uxy(rng), uz(rng));
}

struct RelativeInstance {
  CameraPose pose2;  // camera 1 is (I, 0)
  std::vector<Correspondence2D2D> matches;
  std::vector<WorldPoint> points;
};

inline RelativeInstance random_relative_instance(std::mt19937_64& rng, int n_points) {
  RelativeInstance inst;
  const CameraPose pose1;
  for (;;) {
    inst.pose2 = random_second_camera(rng);
    inst.matches.clear();
    inst.points.clear();
    int attempts = 0;
    while (static_cast<int>(inst.points.size()) < n_points && attempts < 1000) {
      ++attempts;
      const WorldPoint X = random_point_in_frustum(rng);
      if (!in_front(pose1, X) || !in_front(inst.pose2, X)) continue;
      inst.points.push_back(X);
      inst.matches.push_back(Correspondence2D2D{observe(pose1, X), observe(inst.pose2, X)});
    }
    if (static_cast<int>(inst.points.size()) == n_points) return inst;
  }
}

// Same instance shape but with all points on a random plane.
inline RelativeInstance random_planar_instance(std::mt19937_64& rng, int n_points) {
  RelativeInstance inst;
  const CameraPose pose1;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    inst.pose2 = random_second_camera(rng);
    Vec3 normal(u(rng), u(rng), 2.0 + u(rng));
    normal.normalize();
    const WorldPoint anchor(0.0, 0.0, 6.0);
    Vec3 e1 = normal.cross(Vec3::UnitX());
    if (e1.norm() < 1e-3) e1 = normal.cross(Vec3::UnitY());
    e1.normalize();
    const Vec3 e2 = normal.cross(e1);

    inst.matches.clear();
    inst.points.clear();
    int attempts = 0;
    while (static_cast<int>(inst.points.size()) < n_points && attempts < 1000) {
      ++attempts;
      const WorldPoint X = anchor + 2.0 * u(rng) * e1 + 2.0 * u(rng) * e2;
      if (!in_front(pose1, X) || !in_front(inst.pose2, X)) continue;
      inst.points.push_back(X);
      inst.matches.push_back(Correspondence2D2D{observe(pose1, X), observe(inst.pose2, X)});
    }
    if (static_cast<int>(inst.points.size()) == n_points) return inst;
  }
}

// Independent oracle for the essential matrix of a relative pose:
// x_b ~ R X - R T, so E = [-R T]_x R up to scale.
inline Mat3 oracle_essential(const CameraPose& pose2) {
  const Vec3 t = -pose2.R * pose2.T;
  Mat3 S;
  S << 0.0, -t.z(), t.y(), t.z(), 0.0, -t.x(), -t.y(), t.x(), 0.0;
  Mat3 E = S * pose2.R;
  return E / E.norm();
}

// Frobenius distance up to the sign ambiguity of unit-normalized matrices.
inline double essential_distance(const Mat3& a, const Mat3& b) {
  const Mat3 an = a / a.norm();
  const Mat3 bn = b / b.norm();
  return std::min((an - bn).norm(), (an + bn).norm());
}

struct AbsoluteInstance {
  CameraPose pose;
  std::array<Correspondence2D3D, 3> sample;
  std::vector<Correspondence2D3D> extras;
};

inline AbsoluteInstance random_absolute_instance(std::mt19937_64& rng, int n_extras = 0) {
  AbsoluteInstance inst;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    inst.pose.R = random_rotation(rng);
    inst.pose.T = Vec3(3.0 * u(rng), 3.0 * u(rng), 3.0 * u(rng));

    std::vector<Correspondence2D3D> corrs;
    int attempts = 0;
    while (static_cast<int>(corrs.size()) < 3 + n_extras && attempts < 2000) {
      ++attempts;
      // points in the camera's viewing frustum, mapped back to the world
      const Vec3 cam(1.5 * u(rng), 1.5 * u(rng), 5.0 + 2.0 * u(rng));
      const WorldPoint X = inst.pose.R.transpose() * cam + inst.pose.T;
      corrs.push_back(
          Correspondence2D3D{NormalizedPoint{cam.x() / cam.z(), cam.y() / cam.z()}, X});
    }
    if (static_cast<int>(corrs.size()) < 3 + n_extras) continue;

    // reject nearly collinear world triples to stay in the solver's domain
    const Vec3 c01 = corrs[1].X - corrs[0].X;
    const Vec3 c02 = corrs[2].X - corrs[0].X;
    if (c01.cross(c02).norm() < 0.1) continue;

    for (int i = 0; i < 3; ++i) inst.sample[i] = corrs[i];
    inst.extras.assign(corrs.begin() + 3, corrs.end());
    return inst;
  }
}

inline double pose_distance(const CameraPose& a, const CameraPose& b) {
  return std::max((a.R - b.R).norm(), (a.T - b.T).norm());
}

}  // namespace test_support
