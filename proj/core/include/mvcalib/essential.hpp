#pragma once

#include <array>
#include <vector>

#include "mvcalib/geometry.hpp"

namespace mvcalib {

/// A pair of normalized image points observing the same 3D point:
/// a in the first image, b in the second.
struct Correspondence2D2D {
  NormalizedPoint a;
  NormalizedPoint b;
};

/// Relative pose of the second camera in the first camera's frame,
/// with a unit-norm center direction (the metric scale is free).
struct RelativePose {
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::UnitX();
};

/// The essential matrix induced by a relative pose, in the convention
/// b^T E a = 0 for normalized rays a = (u_a, v_a, 1), b = (u_b, v_b, 1).
EssentialMatrix essential_from_pose(const RelativePose& pose);

/// Minimal 5-point solver for the essential matrix.
///
/// Builds the 5x9 epipolar design matrix, extracts its 4-dimensional
/// nullspace by SVD, expands the determinant and trace cubic constraints
/// into a 10x20 polynomial system, Gauss-Jordan eliminates it with partial
/// pivoting, and reduces to a degree-10 univariate polynomial whose real
/// roots (companion-matrix eigenvalues) yield the candidate matrices.
///
/// Every returned matrix has unit Frobenius norm and satisfies the rank-2
/// and trace constraints. Returns 0-10 candidates.
/// Throws DegenerateSample when the design matrix has rank < 5.
std::vector<EssentialMatrix> solve_essential_5pt(const std::array<Correspondence2D2D, 5>& sample);

/// Factorizes E into the relative pose whose four-way (R, +-T) ambiguity is
/// resolved by a cheirality vote: midpoint triangulation of each inlier must
/// give positive depth in both cameras. The winner needs a strict majority
/// of positive-depth votes; ties between factorizations are broken by total
/// Sampson error and then by factorization order.
/// Throws AmbiguousCheirality when no factorization wins a strict majority.
RelativePose decompose_essential(const EssentialMatrix& E,
                                 const std::vector<Correspondence2D2D>& inliers);

/// First-order (Sampson) approximation of the squared geometric epipolar
/// distance of a correspondence under E. Zero iff b^T E a = 0.
double sampson_error(const EssentialMatrix& E, const Correspondence2D2D& c);

}  // namespace mvcalib
