#include "mvcalib/triangulation.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

namespace mvcalib {

namespace {

double total_squared_reprojection(const std::vector<CameraPose>& poses,
                                  const std::vector<NormalizedPoint>& xs, const WorldPoint& X) {
  double cost = 0.0;
  for (size_t i = 0; i < poses.size(); ++i) {
    const Vec3 y = poses[i].camera_frame(X);
    const Vec2 r(y.x() / y.z() - xs[i].u, y.y() / y.z() - xs[i].v);
    cost += r.squaredNorm();
  }
  return cost;
}

}  // namespace

WorldPoint triangulate_two_view(const CameraPose& pose_a, const CameraPose& pose_b,
                                const NormalizedPoint& xa, const NormalizedPoint& xb) {
  const Vec3 baseline = pose_b.T - pose_a.T;
  const double pose_scale = 1.0 + std::max(pose_a.T.norm(), pose_b.T.norm());
  if (baseline.norm() <= 1e-12 * pose_scale) {
    throw ParallelRays("zero baseline");
  }

  const Vec3 da = (pose_a.R.transpose() * xa.ray()).normalized();
  const Vec3 db = (pose_b.R.transpose() * xb.ray()).normalized();
  const double d_ab = da.dot(db);
  const double cross_sq = 1.0 - d_ab * d_ab;
  if (cross_sq <= 1e-12) {
    throw ParallelRays();
  }

  // Minimize || (T_a + s da) - (T_b + t db) ||^2.
  const double b1 = da.dot(baseline);
  const double b2 = db.dot(baseline);
  const double s = (b1 - d_ab * b2) / cross_sq;
  const double t = (d_ab * b1 - b2) / cross_sq;

  const WorldPoint X = 0.5 * (pose_a.T + s * da + pose_b.T + t * db);
  if (pose_a.camera_frame(X).z() <= 0.0 || pose_b.camera_frame(X).z() <= 0.0) {
    throw BehindCamera();
  }
  return X;
}

WorldPoint triangulate_nview(const std::vector<CameraPose>& poses,
                             const std::vector<NormalizedPoint>& xs) {
  const size_t n = poses.size();
  if (n < 2 || xs.size() != n) {
    throw ParallelRays("need at least two views");
  }

  // Two rows per view of [x]_x R (X - T) = 0.
  Eigen::MatrixXd A(2 * n, 3);
  Eigen::VectorXd b(2 * n);
  for (size_t i = 0; i < n; ++i) {
    const Mat3 S = skew(xs[i].ray());
    const Mat3 SR = S * poses[i].R;
    const Vec3 rhs = SR * poses[i].T;
    A.row(2 * i) = SR.row(0);
    A.row(2 * i + 1) = SR.row(1);
    b(2 * i) = rhs(0);
    b(2 * i + 1) = rhs(1);
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(2) <= 1e-10 * std::max(1.0, sv(0))) {
    throw ParallelRays("rays span fewer than three dimensions");
  }
  WorldPoint X = svd.solve(b);

  // Gauss-Newton on the reprojection cost; steps that fail to decrease the
  // cost are backtracked so the total error never increases.
  double cost = total_squared_reprojection(poses, xs, X);
  for (int it = 0; it < 5; ++it) {
    Mat3 H = Mat3::Zero();
    Vec3 g = Vec3::Zero();
    for (size_t i = 0; i < n; ++i) {
      const Vec3 y = poses[i].camera_frame(X);
      if (y.z() <= 0.0) continue;
      Eigen::Matrix<double, 2, 3> dpi;
      dpi << 1.0 / y.z(), 0.0, -y.x() / (y.z() * y.z()), 0.0, 1.0 / y.z(),
          -y.y() / (y.z() * y.z());
      const Eigen::Matrix<double, 2, 3> J = dpi * poses[i].R;
      const Vec2 r(y.x() / y.z() - xs[i].u, y.y() / y.z() - xs[i].v);
      H += J.transpose() * J;
      g += J.transpose() * r;
    }
    Eigen::LDLT<Mat3> ldlt(H);
    if (ldlt.info() != Eigen::Success) break;
    Vec3 step = ldlt.solve(-g);
    bool improved = false;
    for (int half = 0; half < 4; ++half) {
      const WorldPoint Xc = X + step;
      const double c = total_squared_reprojection(poses, xs, Xc);
      if (c < cost && std::isfinite(c)) {
        X = Xc;
        cost = c;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }

  for (size_t i = 0; i < n; ++i) {
    if (poses[i].camera_frame(X).z() <= 0.0) {
      throw BehindCamera();
    }
  }
  return X;
}

double reprojection_error(const CameraPose& pose, const WorldPoint& X, const NormalizedPoint& x) {
  const Vec3 y = pose.camera_frame(X);
  if (y.z() <= 0.0) {
    throw BehindCamera();
  }
  return Vec2(y.x() / y.z() - x.u, y.y() / y.z() - x.v).norm();
}

bool visually_compatible(const Descriptor& d1, const Descriptor& d2, double tau_desc) {
  return (d1 - d2).norm() < tau_desc;
}

bool geometrically_compatible(const ModelPoint& point, const CameraPose& pose,
                              const NormalizedPoint& x, double tau_reproj) {
  const Vec3 y = pose.camera_frame(point.X);
  if (y.z() <= 0.0) return false;
  return Vec2(y.x() / y.z() - x.u, y.y() / y.z() - x.v).norm() < tau_reproj;
}

}  // namespace mvcalib
