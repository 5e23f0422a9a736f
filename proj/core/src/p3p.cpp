#include "mvcalib/p3p.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvcalib {

namespace {

// Affine polynomials in the conic-family parameter; products build the cubic.
struct Affine {
  double c0 = 0.0;
  double c1 = 0.0;
};

// Rotation taking `from` onto `to` (centered sets), Horn's closed-form
// quaternion method: the unit quaternion is the eigenvector of the largest
// eigenvalue of the 4x4 profile matrix.
Mat3 horn_rotation(const std::array<Vec3, 3>& from, const std::array<Vec3, 3>& to) {
  Mat3 S = Mat3::Zero();
  for (int i = 0; i < 3; ++i) S += from[i] * to[i].transpose();

  Eigen::Matrix4d N;
  const double sxx = S(0, 0), sxy = S(0, 1), sxz = S(0, 2);
  const double syx = S(1, 0), syy = S(1, 1), syz = S(1, 2);
  const double szx = S(2, 0), szy = S(2, 1), szz = S(2, 2);
  N << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
       syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
       szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
       sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(N);
  const Eigen::Vector4d q = es.eigenvectors().col(3);  // largest eigenvalue
  const Eigen::Quaterniond quat(q(0), q(1), q(2), q(3));
  return quat.normalized().toRotationMatrix();
}

// Newton refinement of the camera-to-point distances on the three
// law-of-cosine equations. A couple of steps recover the precision lost in
// the cubic/quadratic cascade.
void polish_distances(double cos_alpha, double cos_beta, double cos_gamma, double a2, double b2,
                      double c2, Vec3* s) {
  for (int it = 0; it < 3; ++it) {
    const double s1 = (*s)(0), s2 = (*s)(1), s3 = (*s)(2);
    Vec3 f(s2 * s2 + s3 * s3 - 2.0 * s2 * s3 * cos_alpha - a2,
           s1 * s1 + s3 * s3 - 2.0 * s1 * s3 * cos_beta - b2,
           s1 * s1 + s2 * s2 - 2.0 * s1 * s2 * cos_gamma - c2);
    Mat3 J;
    J << 0.0, 2.0 * s2 - 2.0 * s3 * cos_alpha, 2.0 * s3 - 2.0 * s2 * cos_alpha,
        2.0 * s1 - 2.0 * s3 * cos_beta, 0.0, 2.0 * s3 - 2.0 * s1 * cos_beta,
        2.0 * s1 - 2.0 * s2 * cos_gamma, 2.0 * s2 - 2.0 * s1 * cos_gamma, 0.0;
    Eigen::FullPivLU<Mat3> lu(J);
    if (!lu.isInvertible()) return;
    const Vec3 delta = lu.solve(f);
    *s -= delta;
    if (delta.cwiseAbs().maxCoeff() < 1e-14 * s->cwiseAbs().maxCoeff()) return;
  }
}

}  // namespace

std::vector<CameraPose> solve_p3p_finsterwalder(const std::array<Correspondence2D3D, 3>& sample) {
  const WorldPoint& P1 = sample[0].X;
  const WorldPoint& P2 = sample[1].X;
  const WorldPoint& P3 = sample[2].X;

  const double span = std::max({(P2 - P1).norm(), (P3 - P1).norm(), (P3 - P2).norm()});
  if (span == 0.0 || (P2 - P1).cross(P3 - P1).norm() < 1e-12 * span * span) {
    throw DegenerateSample("world points are collinear");
  }

  const std::array<Vec3, 3> rays = {sample[0].x.ray().normalized(),
                                    sample[1].x.ray().normalized(),
                                    sample[2].x.ray().normalized()};
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (rays[i].cross(rays[j]).norm() < 1e-12) {
        throw DegenerateSample("image rays coincide");
      }
    }
  }

  const double cos_alpha = rays[1].dot(rays[2]);
  const double cos_beta = rays[0].dot(rays[2]);
  const double cos_gamma = rays[0].dot(rays[1]);
  const double a2 = (P2 - P3).squaredNorm();
  const double b2 = (P1 - P3).squaredNorm();
  const double c2 = (P1 - P2).squaredNorm();

  const double aa = a2 / b2;
  const double cc = c2 / b2;

  // Conic family G(u, v; lambda) = eq_a + lambda * eq_b over the distance
  // ratios u = s2/s1, v = s3/s1. Each coefficient is affine in lambda.
  const Affine A{-1.0, -1.0};
  const Affine B{cos_alpha, 0.0};
  const Affine C{aa - 1.0, cc};
  const Affine D{0.0, cos_gamma};
  const Affine Ecf{-aa * cos_beta, -cc * cos_beta};
  const Affine F{aa, cc - 1.0};

  // det of [[A,B,D],[B,C,E],[D,E,F]] expands to a cubic in lambda.
  auto mul2 = [](const Affine& p, const Affine& q) {
    return std::array<double, 3>{p.c0 * q.c0, p.c0 * q.c1 + p.c1 * q.c0, p.c1 * q.c1};
  };
  auto mul3 = [](const std::array<double, 3>& p, const Affine& q) {
    return std::array<double, 4>{p[0] * q.c0, p[0] * q.c1 + p[1] * q.c0,
                                 p[1] * q.c1 + p[2] * q.c0, p[2] * q.c1};
  };
  auto sub2 = [](const std::array<double, 3>& p, const std::array<double, 3>& q) {
    return std::array<double, 3>{p[0] - q[0], p[1] - q[1], p[2] - q[2]};
  };
  const auto term1 = mul3(sub2(mul2(C, F), mul2(Ecf, Ecf)), A);
  const auto term2 = mul3(sub2(mul2(B, F), mul2(Ecf, D)), B);
  const auto term3 = mul3(sub2(mul2(B, Ecf), mul2(C, D)), D);
  std::array<double, 4> cubic;
  for (int i = 0; i < 4; ++i) cubic[i] = term1[i] - term2[i] + term3[i];

  // Real roots of the cubic via the 3x3 companion matrix (falls back to the
  // quadratic when the leading coefficient vanishes).
  std::vector<double> lambdas;
  {
    double max_abs = 0.0;
    for (double c : cubic) max_abs = std::max(max_abs, std::abs(c));
    int deg = 3;
    while (deg > 0 && std::abs(cubic[deg]) < 1e-13 * max_abs) --deg;
    if (deg >= 1) {
      Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
      for (int i = 0; i + 1 < deg; ++i) comp(i + 1, i) = 1.0;
      for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -cubic[i] / cubic[deg];
      Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
      for (int i = 0; i < deg; ++i) {
        const auto r = es.eigenvalues()(i);
        if (std::abs(r.imag()) < 1e-8 * (1.0 + std::abs(r.real()))) lambdas.push_back(r.real());
      }
    }
  }
  if (lambdas.empty()) throw NoRealSolution("conic family has no real degenerate member");

  std::vector<Vec3> distance_triples;
  auto push_unique = [&](const Vec3& s) {
    for (const Vec3& t : distance_triples) {
      if ((t - s).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + s.cwiseAbs().maxCoeff())) return;
    }
    distance_triples.push_back(s);
  };

  for (double lambda : lambdas) {
    const double Av = A.c0 + lambda * A.c1;
    const double Bv = B.c0 + lambda * B.c1;
    const double Cv = C.c0 + lambda * C.c1;
    const double Dv = D.c0 + lambda * D.c1;
    const double Ev = Ecf.c0 + lambda * Ecf.c1;
    const double Fv = F.c0 + lambda * F.c1;
    if (std::abs(Av) < 1e-12) continue;  // another root handles this member

    const double p_sq = Bv * Bv - Av * Cv;
    if (p_sq < 0.0) continue;
    const double p = std::sqrt(p_sq);
    double q;
    if (p > 1e-12) {
      q = (Bv * Dv - Av * Ev) / p;
    } else {
      const double q_sq = Dv * Dv - Av * Fv;
      if (q_sq < 0.0) continue;
      q = std::sqrt(q_sq);
    }

    // The degenerate conic splits into u = m v + n for the two sign choices.
    for (int sign = -1; sign <= 1; sign += 2) {
      const double m = (-Bv + sign * p) / Av;
      const double n = (-Dv + sign * q) / Av;

      // Intersect with eq_b: u^2 - 2 u cos_gamma - cc v^2 + 2 cc cos_beta v + 1 - cc = 0.
      const double qa = m * m - cc;
      const double qb = 2.0 * (m * n - m * cos_gamma + cc * cos_beta);
      const double qc = n * n - 2.0 * n * cos_gamma + 1.0 - cc;

      std::vector<double> vs;
      if (std::abs(qa) < 1e-14) {
        if (std::abs(qb) > 1e-14) vs.push_back(-qc / qb);
      } else {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc < 0.0) continue;
        const double sq = std::sqrt(disc);
        vs.push_back((-qb + sq) / (2.0 * qa));
        vs.push_back((-qb - sq) / (2.0 * qa));
      }

      for (double v : vs) {
        const double u = m * v + n;
        if (!(u > 0.0) || !(v > 0.0)) continue;
        const double denom = 1.0 + v * v - 2.0 * v * cos_beta;
        if (!(denom > 0.0)) continue;
        const double s1 = std::sqrt(b2 / denom);
        Vec3 s(s1, u * s1, v * s1);
        polish_distances(cos_alpha, cos_beta, cos_gamma, a2, b2, c2, &s);
        if (s.minCoeff() > 0.0) push_unique(s);
      }
    }
  }

  if (distance_triples.empty()) throw NoRealSolution();

  std::vector<CameraPose> poses;
  for (const Vec3& s : distance_triples) {
    // Camera-frame points, then absolute orientation world -> camera.
    const std::array<Vec3, 3> cam = {s(0) * rays[0], s(1) * rays[1], s(2) * rays[2]};
    const std::array<Vec3, 3> world = {P1, P2, P3};

    const Vec3 cam_centroid = (cam[0] + cam[1] + cam[2]) / 3.0;
    const Vec3 world_centroid = (world[0] + world[1] + world[2]) / 3.0;
    std::array<Vec3, 3> cam_c, world_c;
    for (int i = 0; i < 3; ++i) {
      cam_c[i] = cam[i] - cam_centroid;
      world_c[i] = world[i] - world_centroid;
    }

    CameraPose pose;
    pose.R = horn_rotation(world_c, cam_c);
    pose.T = world_centroid - pose.R.transpose() * cam_centroid;

    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      const Vec3 y = pose.camera_frame(sample[i].X);
      if (y.z() <= 0.0) {
        ok = false;
        break;
      }
      const Vec2 err(y.x() / y.z() - sample[i].x.u, y.y() / y.z() - sample[i].x.v);
      if (err.norm() >= 1e-6) {
        ok = false;
        break;
      }
    }
    if (ok) poses.push_back(pose);
  }

  if (poses.empty()) throw NoRealSolution("no admissible positive-depth solution");
  return poses;
}

CameraPose disambiguate_pose(const std::vector<CameraPose>& candidates,
                             const std::vector<Correspondence2D3D>& extra, double tol) {
  constexpr double kBehindPenalty = 1e6;

  int best = 0;
  int best_support = -1;
  double best_total = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < candidates.size(); ++i) {
    int support = 0;
    double total = 0.0;
    for (const auto& c : extra) {
      const Vec3 y = candidates[i].camera_frame(c.X);
      if (y.z() <= 0.0) {
        total += kBehindPenalty;
        continue;
      }
      const Vec2 err(y.x() / y.z() - c.x.u, y.y() / y.z() - c.x.v);
      const double e = err.norm();
      total += e;
      if (e < tol) ++support;
    }
    if (support > best_support || (support == best_support && total < best_total)) {
      best = static_cast<int>(i);
      best_support = support;
      best_total = total;
    }
  }
  return candidates[best];
}

}  // namespace mvcalib
