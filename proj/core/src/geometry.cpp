#include "mvcalib/geometry.hpp"

#include <cmath>

namespace mvcalib {

bool is_rotation(const Mat3& R, double tol) {
  const double orth = (R.transpose() * R - Mat3::Identity()).norm();
  return orth <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

NormalizedPoint project(const CameraPose& pose, const WorldPoint& X) {
  const Vec3 y = pose.camera_frame(X);
  if (y.z() <= 0.0) {
    throw PointBehindCamera();
  }
  return {y.x() / y.z(), y.y() / y.z()};
}

NormalizedPoint distort(const NormalizedPoint& p, const CameraIntrinsics& intr) {
  const double x = p.u;
  const double y = p.v;
  const double r2 = x * x + y * y;
  const double radial = 1.0 + intr.k1 * r2 + intr.k2 * r2 * r2;
  const double xd = x * radial + 2.0 * intr.p1 * x * y + intr.p2 * (r2 + 2.0 * x * x);
  const double yd = y * radial + intr.p1 * (r2 + 2.0 * y * y) + 2.0 * intr.p2 * x * y;
  return {xd, yd};
}

Vec2 normalized_to_pixel(const NormalizedPoint& p, const CameraIntrinsics& intr) {
  const NormalizedPoint d = distort(p, intr);
  return {intr.fx * d.u + intr.skew * d.v + intr.cx, intr.fy * d.v + intr.cy};
}

NormalizedPoint undistort_normalize(const Vec2& p_pixel, const CameraIntrinsics& intr) {
  // K^-1 for an upper-triangular K with unit last row.
  const double yd = (p_pixel.y() - intr.cy) / intr.fy;
  const double xd = (p_pixel.x() - intr.cx - intr.skew * yd) / intr.fx;

  if (intr.k1 == 0.0 && intr.k2 == 0.0 && intr.p1 == 0.0 && intr.p2 == 0.0) {
    return {xd, yd};
  }

  constexpr int kMaxIterations = 20;
  constexpr double kTol = 1e-12;
  double x = xd;
  double y = yd;
  for (int it = 0; it < kMaxIterations; ++it) {
    const double r2 = x * x + y * y;
    const double radial = 1.0 + intr.k1 * r2 + intr.k2 * r2 * r2;
    const double dx = 2.0 * intr.p1 * x * y + intr.p2 * (r2 + 2.0 * x * x);
    const double dy = intr.p1 * (r2 + 2.0 * y * y) + 2.0 * intr.p2 * x * y;
    if (radial <= 0.0 || !std::isfinite(radial)) {
      break;  // outside the invertible range of the model
    }
    const double xn = (xd - dx) / radial;
    const double yn = (yd - dy) / radial;
    const double step = std::max(std::abs(xn - x), std::abs(yn - y));
    x = xn;
    y = yn;
    if (step < kTol) {
      return {x, y};
    }
  }
  throw NoConvergence();
}

CameraPose compose_relative(const CameraPose& pose_a, const CameraPose& pose_b) {
  CameraPose rel;
  rel.R = pose_b.R * pose_a.R.transpose();
  rel.T = pose_a.R * (pose_b.T - pose_a.T);
  return rel;
}

}  // namespace mvcalib
