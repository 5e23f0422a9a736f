#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "mvcalib/errors.hpp"

namespace mvcalib {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// A 3D point in world units.
using WorldPoint = Eigen::Vector3d;

/// Image coordinates after multiplication by K^-1 (dimensionless).
struct NormalizedPoint {
  double u = 0.0;
  double v = 0.0;

  Vec2 vec() const { return {u, v}; }
  /// Homogeneous viewing ray (u, v, 1).
  Vec3 ray() const { return {u, v, 1.0}; }
};

/// Calibration matrix entries plus Brown-Conrady distortion coefficients.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;

  /// Upper-triangular 3x3 calibration matrix with K(2,2) = 1.
  Mat3 matrix() const {
    Mat3 K;
    K << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return K;
  }

  bool valid() const { return fx > 0.0 && fy > 0.0; }
};

/// Camera extrinsics: world-to-camera rotation R and camera center T
/// in world units. A world point X maps to camera coordinates R*(X - T).
struct CameraPose {
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();

  static CameraPose identity() { return CameraPose{}; }

  /// Camera-frame coordinates of a world point.
  Vec3 camera_frame(const WorldPoint& X) const { return R * (X - T); }
};

/// Essential matrix, defined up to scale.
struct EssentialMatrix {
  Mat3 m = Mat3::Zero();

  /// Copy scaled to unit Frobenius norm.
  EssentialMatrix normalized() const {
    const double n = m.norm();
    return EssentialMatrix{n > 0.0 ? Mat3(m / n) : m};
  }
};

/// Cross-product (skew-symmetric) matrix of t, so skew(t) * x == t x x.
inline Mat3 skew(const Vec3& t) {
  Mat3 S;
  S << 0.0, -t.z(), t.y(), t.z(), 0.0, -t.x(), -t.y(), t.x(), 0.0;
  return S;
}

/// True when R is orthonormal with determinant +1 within tol (Frobenius).
bool is_rotation(const Mat3& R, double tol = 1e-9);

/// Perspective projection of a world point: pi(R(X - T)).
/// Throws PointBehindCamera when the camera-frame depth is <= 0.
NormalizedPoint project(const CameraPose& pose, const WorldPoint& X);

/// Forward Brown-Conrady distortion of a normalized point.
NormalizedPoint distort(const NormalizedPoint& p, const CameraIntrinsics& intr);

/// Maps a normalized point to pixel coordinates, applying distortion first.
Vec2 normalized_to_pixel(const NormalizedPoint& p, const CameraIntrinsics& intr);

/// Applies K^-1 to a pixel point and inverts the distortion model by
/// fixed-point iteration (max 20 iterations, convergence 1e-12). With all
/// distortion coefficients zero the result is exactly K^-1 * p.
/// Throws NoConvergence when the iteration stalls.
NormalizedPoint undistort_normalize(const Vec2& p_pixel, const CameraIntrinsics& intr);

/// Pose of camera b expressed in camera a's frame:
/// (R_b R_a^T, R_a (T_b - T_a)).
CameraPose compose_relative(const CameraPose& pose_a, const CameraPose& pose_b);

}  // namespace mvcalib
