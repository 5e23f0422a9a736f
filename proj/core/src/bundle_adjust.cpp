#include "mvcalib/bundle_adjust.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvcalib {

namespace {

using Mat26 = Eigen::Matrix<double, 2, 6>;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

void validate(const BaProblem& p) {
  const int ncams = static_cast<int>(p.poses.size());
  const int npts = static_cast<int>(p.points.size());
  if (p.fixed_cameras.empty()) {
    throw InvalidProblem("fixed camera set must be nonempty");
  }
  for (int c : p.fixed_cameras) {
    if (c < 0 || c >= ncams) throw InvalidProblem("fixed camera index out of range");
  }
  for (const auto& obs : p.observations) {
    if (obs.camera < 0 || obs.camera >= ncams || obs.point < 0 || obs.point >= npts) {
      throw InvalidProblem("observation references a missing pose or point");
    }
  }
}

std::vector<int> camera_slots(const BaProblem& p) {
  std::vector<bool> fixed(p.poses.size(), false);
  for (int c : p.fixed_cameras) fixed[c] = true;
  std::vector<int> slot(p.poses.size(), -1);
  int next = 0;
  for (size_t i = 0; i < p.poses.size(); ++i) {
    if (!fixed[i]) slot[i] = next++;
  }
  return slot;
}

Mat3 axis_angle_rotation(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

// Residual and Jacobian blocks of a single observation at the current state.
// y = R(X - T); r = pi(y) - x; the rotation increment acts on the left,
// R <- exp(skew(w)) R, so dy/dw = -skew(y).
struct ObsBlocks {
  Vec2 r;
  Mat26 J_cam;  // d r / d (w, T)
  Mat23 J_pt;   // d r / d X
};

bool eval_observation(const CameraPose& pose, const WorldPoint& X, const NormalizedPoint& x,
                      ObsBlocks* out) {
  const Vec3 y = pose.camera_frame(X);
  if (y.z() <= 0.0) return false;
  const double iz = 1.0 / y.z();
  out->r = Vec2(y.x() * iz - x.u, y.y() * iz - x.v);

  Mat23 dpi;
  dpi << iz, 0.0, -y.x() * iz * iz, 0.0, iz, -y.y() * iz * iz;
  out->J_cam.leftCols<3>() = dpi * (-skew(y));
  out->J_cam.rightCols<3>() = dpi * (-pose.R);
  out->J_pt = dpi * pose.R;
  return true;
}

double evaluate_cost(const BaProblem& p) {
  double cost = 0.0;
  for (const auto& obs : p.observations) {
    const Vec3 y = p.poses[obs.camera].camera_frame(p.points[obs.point]);
    if (y.z() <= 0.0) return std::numeric_limits<double>::infinity();
    const Vec2 r(y.x() / y.z() - obs.x.u, y.y() / y.z() - obs.x.v);
    cost += r.squaredNorm();
  }
  return cost;
}

// Normal-equation blocks in the camera/point structure.
struct NormalBlocks {
  std::vector<Eigen::Matrix<double, 6, 6>> B;  // per free camera
  std::vector<Vec6> g_cam;
  std::vector<Mat3> C;  // per point
  std::vector<Vec3> g_pt;
  // per point: coupling blocks to the free cameras observing it
  std::vector<std::vector<std::pair<int, Mat63>>> E;
  double cost = 0.0;
  double grad_inf = 0.0;
};

bool build_normal_blocks(const BaProblem& p, const std::vector<int>& slot, int nfree,
                         NormalBlocks* nb) {
  nb->B.assign(nfree, Eigen::Matrix<double, 6, 6>::Zero());
  nb->g_cam.assign(nfree, Vec6::Zero());
  nb->C.assign(p.points.size(), Mat3::Zero());
  nb->g_pt.assign(p.points.size(), Vec3::Zero());
  nb->E.assign(p.points.size(), {});
  nb->cost = 0.0;

  for (const auto& obs : p.observations) {
    ObsBlocks blocks;
    if (!eval_observation(p.poses[obs.camera], p.points[obs.point], obs.x, &blocks)) {
      return false;
    }
    nb->cost += blocks.r.squaredNorm();

    const int f = slot[obs.camera];
    nb->C[obs.point] += blocks.J_pt.transpose() * blocks.J_pt;
    nb->g_pt[obs.point] += blocks.J_pt.transpose() * blocks.r;
    if (f >= 0) {
      nb->B[f] += blocks.J_cam.transpose() * blocks.J_cam;
      nb->g_cam[f] += blocks.J_cam.transpose() * blocks.r;
      auto& list = nb->E[obs.point];
      const Mat63 coupling = blocks.J_cam.transpose() * blocks.J_pt;
      bool merged = false;
      for (auto& [other, block] : list) {
        if (other == f) {
          block += coupling;
          merged = true;
          break;
        }
      }
      if (!merged) list.emplace_back(f, coupling);
    }
  }

  nb->grad_inf = 0.0;
  for (const auto& g : nb->g_cam) nb->grad_inf = std::max(nb->grad_inf, g.cwiseAbs().maxCoeff());
  for (const auto& g : nb->g_pt) nb->grad_inf = std::max(nb->grad_inf, g.cwiseAbs().maxCoeff());
  return true;
}

// Solves (H + lambda I) delta = -g through the Schur complement on the
// point blocks. Returns false when the reduced system is not solvable.
bool solve_damped(const NormalBlocks& nb, double lambda, Eigen::VectorXd* delta_cam,
                  std::vector<Vec3>* delta_pt) {
  const int nfree = static_cast<int>(nb.B.size());
  const int npts = static_cast<int>(nb.C.size());

  std::vector<Mat3> C_inv(npts);
  for (int j = 0; j < npts; ++j) {
    const Mat3 Cd = nb.C[j] + lambda * Mat3::Identity();
    Eigen::LDLT<Mat3> ldlt(Cd);
    if (ldlt.info() != Eigen::Success) return false;
    C_inv[j] = ldlt.solve(Mat3::Identity());
    if (!C_inv[j].allFinite()) return false;
  }

  if (nfree > 0) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(6 * nfree, 6 * nfree);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(6 * nfree);
    for (int f = 0; f < nfree; ++f) {
      S.block<6, 6>(6 * f, 6 * f) =
          nb.B[f] + lambda * Eigen::Matrix<double, 6, 6>::Identity();
      rhs.segment<6>(6 * f) = -nb.g_cam[f];
    }
    for (int j = 0; j < npts; ++j) {
      const auto& list = nb.E[j];
      for (const auto& [fa, Ea] : list) {
        const Mat63 EaCinv = Ea * C_inv[j];
        rhs.segment<6>(6 * fa) += EaCinv * nb.g_pt[j];
        for (const auto& [fb, Eb] : list) {
          S.block<6, 6>(6 * fa, 6 * fb) -= EaCinv * Eb.transpose();
        }
      }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success) return false;
    *delta_cam = ldlt.solve(rhs);
    if (!delta_cam->allFinite()) return false;
  } else {
    delta_cam->resize(0);
  }

  delta_pt->assign(npts, Vec3::Zero());
  for (int j = 0; j < npts; ++j) {
    Vec3 rhs = -nb.g_pt[j];
    for (const auto& [fa, Ea] : nb.E[j]) {
      rhs -= Ea.transpose() * delta_cam->segment<6>(6 * fa);
    }
    (*delta_pt)[j] = C_inv[j] * rhs;
    if (!(*delta_pt)[j].allFinite()) return false;
  }
  return true;
}

BaProblem apply_step(const BaProblem& p, const std::vector<int>& slot,
                     const Eigen::VectorXd& delta_cam, const std::vector<Vec3>& delta_pt) {
  BaProblem out = p;
  for (size_t i = 0; i < p.poses.size(); ++i) {
    const int f = slot[i];
    if (f < 0) continue;
    const Vec6 d = delta_cam.segment<6>(6 * f);
    out.poses[i].R = axis_angle_rotation(d.head<3>()) * p.poses[i].R;
    out.poses[i].T = p.poses[i].T + d.tail<3>();
  }
  for (size_t j = 0; j < p.points.size(); ++j) {
    out.points[j] = p.points[j] + delta_pt[j];
  }
  return out;
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::SparseMatrix<double>> residuals_and_jacobian(
    const BaProblem& problem) {
  validate(problem);
  const std::vector<int> slot = camera_slots(problem);
  int nfree = 0;
  for (int s : slot) nfree = std::max(nfree, s + 1);
  const int nobs = static_cast<int>(problem.observations.size());
  const int ncols = 6 * nfree + 3 * static_cast<int>(problem.points.size());

  Eigen::VectorXd r(2 * nobs);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(nobs) * 18);

  for (int i = 0; i < nobs; ++i) {
    const auto& obs = problem.observations[i];
    ObsBlocks blocks;
    if (!eval_observation(problem.poses[obs.camera], problem.points[obs.point], obs.x, &blocks)) {
      throw BehindCamera("observation has non-positive depth");
    }
    r.segment<2>(2 * i) = blocks.r;

    const int f = slot[obs.camera];
    if (f >= 0) {
      for (int row = 0; row < 2; ++row) {
        for (int col = 0; col < 6; ++col) {
          triplets.emplace_back(2 * i + row, 6 * f + col, blocks.J_cam(row, col));
        }
      }
    }
    const int pc = 6 * nfree + 3 * obs.point;
    for (int row = 0; row < 2; ++row) {
      for (int col = 0; col < 3; ++col) {
        triplets.emplace_back(2 * i + row, pc + col, blocks.J_pt(row, col));
      }
    }
  }

  Eigen::SparseMatrix<double> J(2 * nobs, ncols);
  J.setFromTriplets(triplets.begin(), triplets.end());
  return {std::move(r), std::move(J)};
}

BaResult bundle_adjust(const BaProblem& problem, int max_iters, double gradient_tol) {
  validate(problem);
  const std::vector<int> slot = camera_slots(problem);
  int nfree = 0;
  for (int s : slot) nfree = std::max(nfree, s + 1);
  if (6 * nfree + 3 * static_cast<int>(problem.points.size()) < 1) {
    throw InvalidProblem("no free parameters");
  }

  const int nobs = static_cast<int>(problem.observations.size());
  auto rmse = [nobs](double cost) { return nobs > 0 ? std::sqrt(cost / nobs) : 0.0; };

  BaResult result;
  result.problem = problem;

  NormalBlocks nb;
  if (!build_normal_blocks(result.problem, slot, nfree, &nb)) {
    throw BehindCamera("initial state has an observation behind its camera");
  }

  result.report.initial_rmse = rmse(nb.cost);
  result.report.cost_history.push_back(nb.cost);

  double cost = nb.cost;
  double lambda = 1e-4;
  constexpr double kLambdaMin = 1e-12;
  constexpr double kLambdaMax = 1e12;

  if (nb.grad_inf < gradient_tol) {
    result.report.converged = true;
    result.report.final_rmse = rmse(cost);
    return result;
  }

  bool converged = false;
  int accepted = 0;
  while (accepted < max_iters) {
    bool stepped = false;
    while (true) {
      Eigen::VectorXd delta_cam;
      std::vector<Vec3> delta_pt;
      if (!solve_damped(nb, lambda, &delta_cam, &delta_pt)) {
        lambda *= 10.0;
        if (lambda > kLambdaMax) {
          throw SingularNormalEquations();
        }
        continue;
      }

      const BaProblem trial = apply_step(result.problem, slot, delta_cam, delta_pt);
      const double trial_cost = evaluate_cost(trial);
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        result.problem = trial;
        cost = trial_cost;
        result.report.cost_history.push_back(cost);
        lambda = std::max(lambda / 10.0, kLambdaMin);
        ++accepted;
        stepped = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > kLambdaMax) break;  // damping exhausted without progress
    }
    if (!stepped) break;

    if (!build_normal_blocks(result.problem, slot, nfree, &nb)) {
      break;  // accepted state became marginal; keep the best-so-far
    }
    if (nb.grad_inf < gradient_tol) {
      converged = true;
      break;
    }
    const auto& h = result.report.cost_history;
    const double prev = h[h.size() - 2];
    if (prev - cost < 1e-12 * std::max(prev, 1e-300)) {
      converged = true;
      break;
    }
  }

  result.report.iterations = accepted;
  result.report.converged = converged;
  result.report.final_rmse = rmse(cost);
  return result;
}

}  // namespace mvcalib
