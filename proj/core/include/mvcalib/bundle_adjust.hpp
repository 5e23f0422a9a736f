#pragma once

#include <Eigen/Sparse>

#include <utility>
#include <vector>

#include "mvcalib/geometry.hpp"
#include "mvcalib/triangulation.hpp"

namespace mvcalib {

/// One reprojection residual block: camera and point indices plus the
/// measured normalized image location.
struct BaObservation {
  int camera = -1;
  int point = -1;
  NormalizedPoint x;
};

/// Joint pose/point refinement problem. fixed_cameras must be nonempty so
/// the gauge is pinned (camera 1 in the reconstruction pipeline).
struct BaProblem {
  std::vector<CameraPose> poses;
  std::vector<WorldPoint> points;
  std::vector<int> fixed_cameras;
  std::vector<BaObservation> observations;
};

/// Convergence report. rmse values are root-mean-square Euclidean
/// reprojection errors per observation, in normalized units. cost_history
/// holds the sum of squared residuals after each accepted step (element 0
/// is the initial cost).
struct BaReport {
  double initial_rmse = 0.0;
  double final_rmse = 0.0;
  int iterations = 0;  // accepted steps
  bool converged = false;
  std::vector<double> cost_history;
};

struct BaResult {
  BaProblem problem;
  BaReport report;
};

/// Residual vector (two rows per observation, input order) and the analytic
/// block-sparse Jacobian. Columns: free cameras in ascending index order,
/// six each (axis-angle rotation increment, then center), followed by three
/// per point. Throws BehindCamera and InvalidProblem.
std::pair<Eigen::VectorXd, Eigen::SparseMatrix<double>> residuals_and_jacobian(
    const BaProblem& problem);

/// Levenberg-Marquardt over all free pose parameters and point coordinates.
/// Accepted steps strictly decrease the cost; the normal equations are
/// solved through the Schur complement on the point blocks. Terminates on
/// gradient norm < gradient_tol, relative cost decrease < 1e-12, or
/// max_iters accepted steps. Fixed cameras are returned bit-identical.
/// Throws InvalidProblem, BehindCamera (initial state), and
/// SingularNormalEquations.
BaResult bundle_adjust(const BaProblem& problem, int max_iters = 100,
                       double gradient_tol = 1e-10);

}  // namespace mvcalib
