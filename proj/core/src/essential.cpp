#include "mvcalib/essential.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvcalib {

namespace {

// Trivariate polynomials in (x, y, z) of total degree 1, 2 and 3, used to
// expand the cubic essential-matrix constraints over the nullspace basis.
// Degree-3 coefficients follow the column order of the 10x20 elimination
// below: first the ten leading monomials, then (x, y, 1) x (z^2, z, 1).
struct Poly1 {
  double c[4] = {0, 0, 0, 0};  // x, y, z, 1
};
struct Poly2 {
  double c[10] = {0};  // x2, xy, xz, y2, yz, z2, x, y, z, 1
};
struct Poly3 {
  double c[20] = {0};
};

constexpr int kExp1[4][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0}};
constexpr int kExp2[10][3] = {{2, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 2, 0}, {0, 1, 1},
                              {0, 0, 2}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0}};
// x3, y3, x2y, xy2, x2z, x2, y2z, y2, xyz, xy, xz2, xz, x, yz2, yz, y, z3, z2, z, 1
constexpr int kExp3[20][3] = {{3, 0, 0}, {0, 3, 0}, {2, 1, 0}, {1, 2, 0}, {2, 0, 1},
                              {2, 0, 0}, {0, 2, 1}, {0, 2, 0}, {1, 1, 1}, {1, 1, 0},
                              {1, 0, 2}, {1, 0, 1}, {1, 0, 0}, {0, 1, 2}, {0, 1, 1},
                              {0, 1, 0}, {0, 0, 3}, {0, 0, 2}, {0, 0, 1}, {0, 0, 0}};

int index2(int i, int j, int k) {
  for (int n = 0; n < 10; ++n) {
    if (kExp2[n][0] == i && kExp2[n][1] == j && kExp2[n][2] == k) return n;
  }
  return -1;
}

int index3(int i, int j, int k) {
  for (int n = 0; n < 20; ++n) {
    if (kExp3[n][0] == i && kExp3[n][1] == j && kExp3[n][2] == k) return n;
  }
  return -1;
}

Poly2 mul(const Poly1& a, const Poly1& b) {
  Poly2 r;
  for (int i = 0; i < 4; ++i) {
    if (a.c[i] == 0.0) continue;
    for (int j = 0; j < 4; ++j) {
      if (b.c[j] == 0.0) continue;
      const int n = index2(kExp1[i][0] + kExp1[j][0], kExp1[i][1] + kExp1[j][1],
                           kExp1[i][2] + kExp1[j][2]);
      r.c[n] += a.c[i] * b.c[j];
    }
  }
  return r;
}

Poly3 mul(const Poly2& a, const Poly1& b) {
  Poly3 r;
  for (int i = 0; i < 10; ++i) {
    if (a.c[i] == 0.0) continue;
    for (int j = 0; j < 4; ++j) {
      if (b.c[j] == 0.0) continue;
      const int n = index3(kExp2[i][0] + kExp1[j][0], kExp2[i][1] + kExp1[j][1],
                           kExp2[i][2] + kExp1[j][2]);
      r.c[n] += a.c[i] * b.c[j];
    }
  }
  return r;
}

Poly2 sub(const Poly2& a, const Poly2& b) {
  Poly2 r;
  for (int i = 0; i < 10; ++i) r.c[i] = a.c[i] - b.c[i];
  return r;
}

Poly3 add(const Poly3& a, const Poly3& b) {
  Poly3 r;
  for (int i = 0; i < 20; ++i) r.c[i] = a.c[i] + b.c[i];
  return r;
}

Poly3 sub(const Poly3& a, const Poly3& b) {
  Poly3 r;
  for (int i = 0; i < 20; ++i) r.c[i] = a.c[i] - b.c[i];
  return r;
}

Poly2 scale(const Poly2& a, double s) {
  Poly2 r;
  for (int i = 0; i < 10; ++i) r.c[i] = a.c[i] * s;
  return r;
}

// Univariate polynomials with ascending coefficients, fixed max degree.
using Coeffs = std::vector<double>;

Coeffs poly_mul(const Coeffs& a, const Coeffs& b) {
  Coeffs r(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

Coeffs poly_sub(const Coeffs& a, const Coeffs& b) {
  Coeffs r(std::max(a.size(), b.size()), 0.0);
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
  return r;
}

Coeffs poly_add(const Coeffs& a, const Coeffs& b) {
  Coeffs r(std::max(a.size(), b.size()), 0.0);
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

double poly_eval(const Coeffs& a, double z) {
  double v = 0.0;
  for (size_t i = a.size(); i-- > 0;) v = v * z + a[i];
  return v;
}

// Real roots by companion-matrix eigenvalues on the monic coefficients.
// Roots with |imag| >= 1e-8 * (1 + |real|) are discarded.
std::vector<double> real_roots(Coeffs p) {
  double max_abs = 0.0;
  for (double c : p) max_abs = std::max(max_abs, std::abs(c));
  if (max_abs == 0.0) return {};
  while (p.size() > 1 && std::abs(p.back()) < 1e-13 * max_abs) p.pop_back();
  const int deg = static_cast<int>(p.size()) - 1;
  if (deg < 1) return {};

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 0; i < deg - 1; ++i) companion(i + 1, i) = 1.0;
  for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -p[i] / p[deg];

  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
  std::vector<double> roots;
  for (int i = 0; i < deg; ++i) {
    const std::complex<double> r = es.eigenvalues()(i);
    if (std::abs(r.imag()) < 1e-8 * (1.0 + std::abs(r.real()))) {
      roots.push_back(r.real());
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

Mat3 basis_matrix(const Eigen::Matrix<double, 9, 1>& v) {
  Mat3 m;
  m << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  return m;
}

// Gauss-Jordan elimination with partial pivoting on the left 10 columns.
// Throws DegenerateSample when a pivot collapses.
void gauss_jordan(Eigen::Matrix<double, 10, 20>& A) {
  const double scale_ref = A.cwiseAbs().maxCoeff();
  for (int col = 0; col < 10; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 10; ++r) {
      if (std::abs(A(r, col)) > std::abs(A(pivot, col))) pivot = r;
    }
    if (std::abs(A(pivot, col)) < 1e-14 * scale_ref) {
      throw DegenerateSample("polynomial system is rank-deficient");
    }
    if (pivot != col) A.row(pivot).swap(A.row(col));
    A.row(col) /= A(col, col);
    for (int r = 0; r < 10; ++r) {
      if (r != col && A(r, col) != 0.0) {
        A.row(r) -= A(r, col) * A.row(col);
      }
    }
  }
}

// Midpoint-triangulation depths of a correspondence under the factorization
// x_b ~ R x_a + t. Returns false when the rays are (near) parallel.
bool midpoint_depths(const Mat3& R, const Vec3& t, const Correspondence2D2D& c,
                     double* depth_a, double* depth_b) {
  const Vec3 d1 = c.a.ray();
  const Vec3 d2 = R.transpose() * c.b.ray();
  const Vec3 r = -R.transpose() * t;  // center of camera b in camera a's frame

  const double d11 = d1.dot(d1);
  const double d12 = d1.dot(d2);
  const double d22 = d2.dot(d2);
  const double cross_sq = d11 * d22 - d12 * d12;
  if (cross_sq <= 1e-12 * d11 * d22) return false;

  const double b1 = d1.dot(r);
  const double b2 = d2.dot(r);
  const double s = (d22 * b1 - d12 * b2) / cross_sq;
  const double u = (d12 * b1 - d11 * b2) / cross_sq;

  const Vec3 X = 0.5 * (s * d1 + r + u * d2);
  *depth_a = X.z();
  *depth_b = (R * X + t).z();
  return true;
}

}  // namespace

EssentialMatrix essential_from_pose(const RelativePose& pose) {
  const Vec3 t_cam = -pose.R * pose.T;
  return EssentialMatrix{skew(t_cam) * pose.R}.normalized();
}

double sampson_error(const EssentialMatrix& E, const Correspondence2D2D& c) {
  const Vec3 a = c.a.ray();
  const Vec3 b = c.b.ray();
  const Vec3 Ea = E.m * a;
  const Vec3 Etb = E.m.transpose() * b;
  const double num = b.dot(Ea);
  const double den = Ea.head<2>().squaredNorm() + Etb.head<2>().squaredNorm();
  if (den == 0.0) return 0.0;
  return num * num / den;
}

std::vector<EssentialMatrix> solve_essential_5pt(const std::array<Correspondence2D2D, 5>& sample) {
  // 5x9 epipolar design matrix for b^T E a = 0, E vectorized row-major.
  Eigen::Matrix<double, 5, 9> Q;
  for (int i = 0; i < 5; ++i) {
    const Vec3 a = sample[i].a.ray();
    const Vec3 b = sample[i].b.ray();
    Q.row(i) << b.x() * a.x(), b.x() * a.y(), b.x(), b.y() * a.x(), b.y() * a.y(), b.y(),
        a.x(), a.y(), 1.0;
  }

  Eigen::JacobiSVD<Eigen::Matrix<double, 5, 9>> svd(Q, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(4) < 1e-10 * sv(0)) {
    throw DegenerateSample("epipolar design matrix has rank < 5");
  }

  const Mat3 Bx = basis_matrix(svd.matrixV().col(5));
  const Mat3 By = basis_matrix(svd.matrixV().col(6));
  const Mat3 Bz = basis_matrix(svd.matrixV().col(7));
  const Mat3 Bw = basis_matrix(svd.matrixV().col(8));

  // E(x, y, z) = x*Bx + y*By + z*Bz + Bw, entrywise degree-1 polynomials.
  Poly1 ep[3][3];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      ep[r][c] = Poly1{{Bx(r, c), By(r, c), Bz(r, c), Bw(r, c)}};
    }
  }

  Eigen::Matrix<double, 10, 20> A;

  // det(E) = 0.
  const Poly3 det =
      add(mul(sub(mul(ep[1][1], ep[2][2]), mul(ep[1][2], ep[2][1])), ep[0][0]),
          add(mul(sub(mul(ep[1][2], ep[2][0]), mul(ep[1][0], ep[2][2])), ep[0][1]),
              mul(sub(mul(ep[1][0], ep[2][1]), mul(ep[1][1], ep[2][0])), ep[0][2])));

  // 2 E E^T E - tr(E E^T) E = 0, nine entries.
  Poly2 eet[3][3];
  for (int r = 0; r < 3; ++r) {
    for (int c = r; c < 3; ++c) {
      Poly2 s;
      for (int k = 0; k < 3; ++k) {
        const Poly2 term = mul(ep[r][k], ep[c][k]);
        for (int n = 0; n < 10; ++n) s.c[n] += term.c[n];
      }
      eet[r][c] = s;
      eet[c][r] = s;
    }
  }
  Poly2 trace;
  for (int n = 0; n < 10; ++n) {
    trace.c[n] = eet[0][0].c[n] + eet[1][1].c[n] + eet[2][2].c[n];
  }

  int row = 0;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      Poly3 m;
      for (int k = 0; k < 3; ++k) {
        m = add(m, mul(scale(eet[r][k], 2.0), ep[k][c]));
      }
      m = sub(m, mul(trace, ep[r][c]));
      for (int n = 0; n < 20; ++n) A(row, n) = m.c[n];
      ++row;
    }
  }
  for (int n = 0; n < 20; ++n) A(9, n) = det.c[n];

  gauss_jordan(A);

  // Rows 4..9 now read x2z, x2, y2z, y2, xyz, xy plus a 10-column tail over
  // (xz2, xz, x, yz2, yz, y, z3, z2, z, 1). Pairing each z-row with its
  // plain counterpart eliminates the leading monomials and leaves
  // B(z) * (x, y, 1)^T = 0 with polynomial entries.
  Coeffs B[3][3];
  for (int pair = 0; pair < 3; ++pair) {
    const auto e = A.row(4 + 2 * pair).segment<10>(10);
    const auto f = A.row(5 + 2 * pair).segment<10>(10);
    B[pair][0] = {e(2), e(1) - f(2), e(0) - f(1), -f(0)};
    B[pair][1] = {e(5), e(4) - f(5), e(3) - f(4), -f(3)};
    B[pair][2] = {e(9), e(8) - f(9), e(7) - f(8), e(6) - f(7), -f(6)};
  }

  // det(B(z)) is the degree-10 polynomial of the problem.
  const Coeffs m00 = poly_sub(poly_mul(B[1][1], B[2][2]), poly_mul(B[1][2], B[2][1]));
  const Coeffs m01 = poly_sub(poly_mul(B[1][0], B[2][2]), poly_mul(B[1][2], B[2][0]));
  const Coeffs m02 = poly_sub(poly_mul(B[1][0], B[2][1]), poly_mul(B[1][1], B[2][0]));
  const Coeffs det10 = poly_add(poly_sub(poly_mul(B[0][0], m00), poly_mul(B[0][1], m01)),
                                poly_mul(B[0][2], m02));

  std::vector<EssentialMatrix> out;
  for (double z : real_roots(det10)) {
    Mat3 Bz_num;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) Bz_num(r, c) = poly_eval(B[r][c], z);
    }
    // Null vector of B(z) via the largest cross product of two rows.
    Vec3 best = Bz_num.row(0).cross(Bz_num.row(1));
    const Vec3 n02 = Bz_num.row(0).cross(Bz_num.row(2));
    const Vec3 n12 = Bz_num.row(1).cross(Bz_num.row(2));
    if (n02.norm() > best.norm()) best = n02;
    if (n12.norm() > best.norm()) best = n12;
    if (best.norm() == 0.0 || std::abs(best.z()) < 1e-12 * best.norm()) continue;

    const double x = best.x() / best.z();
    const double y = best.y() / best.z();
    const EssentialMatrix cand = EssentialMatrix{x * Bx + y * By + z * Bz + Bw}.normalized();

    // Keep only candidates that verifiably satisfy the constraints.
    double max_epi = 0.0;
    for (const auto& c : sample) {
      max_epi = std::max(max_epi, std::abs(c.b.ray().dot(cand.m * c.a.ray())));
    }
    if (max_epi > 1e-8) continue;
    if (std::abs(cand.m.determinant()) > 1e-8) continue;
    const Mat3 tr_res = 2.0 * cand.m * cand.m.transpose() * cand.m -
                        (cand.m * cand.m.transpose()).trace() * cand.m;
    if (tr_res.cwiseAbs().maxCoeff() > 1e-6) continue;

    out.push_back(cand);
  }
  return out;
}

RelativePose decompose_essential(const EssentialMatrix& E,
                                 const std::vector<Correspondence2D2D>& inliers) {
  Eigen::JacobiSVD<Mat3> svd(E.m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  Mat3 Vt = svd.matrixV().transpose();
  if (U.determinant() < 0.0) U.col(2) *= -1.0;
  if (Vt.determinant() < 0.0) Vt.row(2) *= -1.0;

  Mat3 W;
  W << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Mat3 Ra = U * W * Vt;
  const Mat3 Rb = U * W.transpose() * Vt;
  const Vec3 u3 = U.col(2);

  const std::array<std::pair<Mat3, Vec3>, 4> candidates = {
      std::make_pair(Ra, u3), std::make_pair(Ra, Vec3(-u3)), std::make_pair(Rb, u3),
      std::make_pair(Rb, Vec3(-u3))};

  int best_index = -1;
  int best_votes = -1;
  double best_residual = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const auto& [R, t] = candidates[i];
    int votes = 0;
    for (const auto& c : inliers) {
      double da = 0.0, db = 0.0;
      if (midpoint_depths(R, t, c, &da, &db) && da > 0.0 && db > 0.0) ++votes;
    }
    const EssentialMatrix Ec = EssentialMatrix{skew(t) * R}.normalized();
    double residual = 0.0;
    for (const auto& c : inliers) residual += sampson_error(Ec, c);
    if (votes > best_votes || (votes == best_votes && residual < best_residual)) {
      best_index = i;
      best_votes = votes;
      best_residual = residual;
    }
  }

  if (best_votes * 2 <= static_cast<int>(inliers.size())) {
    throw AmbiguousCheirality();
  }

  const auto& [R, t] = candidates[best_index];
  RelativePose pose;
  pose.R = R;
  pose.T = (-R.transpose() * t).normalized();
  return pose;
}

}  // namespace mvcalib
