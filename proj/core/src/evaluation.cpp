#include "mvcalib/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mvcalib {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double clamped_acos_deg(double x) { return std::acos(std::clamp(x, -1.0, 1.0)) * kRadToDeg; }

// Camera-frame translation -R * T of the motion of pose relative to ref.
Vec3 relative_camera_translation(const CameraPose& ref, const CameraPose& pose) {
  const CameraPose rel = compose_relative(ref, pose);
  return -rel.R * rel.T;
}

}  // namespace

double rotation_error(const Mat3& R_gt, const Mat3& R_est) {
  const double trace = (R_gt.transpose() * R_est).trace();
  return clamped_acos_deg((trace - 1.0) / 2.0);
}

double translation_angle_error(const Vec3& T_gt, const Vec3& T_est) {
  const double ngt = T_gt.norm();
  const double nest = T_est.norm();
  if (ngt == 0.0 || nest == 0.0) {
    throw ZeroVector();
  }
  return clamped_acos_deg(T_gt.dot(T_est) / (ngt * nest));
}

double horn_scale(const std::vector<Vec3>& gt_centers, const std::vector<Vec3>& est_centers) {
  if (gt_centers.size() < 2 || gt_centers.size() != est_centers.size()) {
    throw DegenerateCloud("scale needs two equally sized clouds");
  }
  Vec3 gt_centroid = Vec3::Zero();
  Vec3 est_centroid = Vec3::Zero();
  for (const auto& c : gt_centers) gt_centroid += c;
  for (const auto& c : est_centers) est_centroid += c;
  gt_centroid /= static_cast<double>(gt_centers.size());
  est_centroid /= static_cast<double>(est_centers.size());

  double num = 0.0;
  double den = 0.0;
  for (size_t i = 0; i < gt_centers.size(); ++i) {
    num += (gt_centers[i] - gt_centroid).squaredNorm();
    den += (est_centers[i] - est_centroid).squaredNorm();
  }
  if (den == 0.0 || num == 0.0) {
    throw DegenerateCloud();
  }
  return std::sqrt(num / den);
}

std::vector<double> camera_center_error(const std::vector<Vec3>& gt_centers,
                                        const std::vector<Vec3>& est_centers_aligned, double s) {
  if (gt_centers.size() < 2 || gt_centers.size() != est_centers_aligned.size()) {
    throw DegenerateBaseline("center error needs two equally sized clouds");
  }
  const double alpha = (gt_centers[0] - gt_centers[1]).norm();
  if (alpha == 0.0) {
    throw DegenerateBaseline();
  }
  std::vector<double> errors(gt_centers.size());
  for (size_t i = 0; i < gt_centers.size(); ++i) {
    errors[i] = (s * est_centers_aligned[i] - gt_centers[i]).norm() / alpha;
  }
  return errors;
}

std::map<int, CameraPose> align_to_gt(const Reconstruction& rec,
                                      const CameraPose& gt_first_pose) {
  // World map X' = Q X + b with Q = Rg^T, b = Tg carries the estimate's
  // frame (camera 1 at identity) onto the ground-truth frame; a pose (R, T)
  // becomes (R Q^T, Q T + b).
  const Mat3 Q = gt_first_pose.R.transpose();
  const Vec3 b = gt_first_pose.T;

  std::map<int, CameraPose> aligned;
  for (const auto& [image_id, pose] : rec.poses) {
    CameraPose p;
    p.R = pose.R * gt_first_pose.R;
    p.T = Q * pose.T + b;
    aligned[image_id] = p;
  }
  return aligned;
}

PoseErrorReport evaluate(const Reconstruction& rec, const std::vector<CameraPose>& gt) {
  if (rec.registered.empty()) {
    throw MissingGroundTruth("nothing registered");
  }
  for (int image_id : rec.registered) {
    if (image_id < 0 || image_id >= static_cast<int>(gt.size())) {
      throw MissingGroundTruth("image " + std::to_string(image_id) + " has no ground truth");
    }
  }

  const int first = rec.registered.front();
  const std::map<int, CameraPose> aligned = align_to_gt(rec, gt[first]);

  // Ordered image list: registration order is sequence order here, but the
  // report is emitted by ascending image id for stable CSV output.
  std::vector<int> ids = rec.registered;
  std::sort(ids.begin(), ids.end());

  // Anchor both center clouds at the first camera; the scale then acts
  // about the alignment point and absorbs the free global scale exactly.
  std::vector<Vec3> gt_centers, est_centers;
  gt_centers.reserve(ids.size());
  est_centers.reserve(ids.size());
  for (int id : ids) {
    gt_centers.push_back(gt[id].T - gt[first].T);
    est_centers.push_back(aligned.at(id).T - aligned.at(first).T);
  }

  PoseErrorReport report;
  report.scale = horn_scale(gt_centers, est_centers);
  const std::vector<double> c_errs =
      camera_center_error(gt_centers, est_centers, report.scale);

  for (size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    PoseErrorReport::Row row;
    row.image_id = id;
    row.r_err_deg = rotation_error(gt[id].R, aligned.at(id).R);

    const Vec3 t_gt = relative_camera_translation(gt[first], gt[id]);
    const Vec3 t_est = relative_camera_translation(aligned.at(first), aligned.at(id));
    if (t_gt.norm() < 1e-15 || t_est.norm() < 1e-15) {
      row.t_err_deg = 0.0;  // the reference camera has no translation direction
    } else {
      row.t_err_deg = translation_angle_error(t_gt, t_est);
    }
    row.c_err = c_errs[i];
    report.rows.push_back(row);
  }
  return report;
}

std::string error_report_csv(const PoseErrorReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "scale," << report.scale << "\n";
  out << "image_id,R_err_deg,T_err_deg,C_err\n";
  for (const auto& row : report.rows) {
    out << row.image_id << "," << row.r_err_deg << "," << row.t_err_deg << "," << row.c_err
        << "\n";
  }
  return out.str();
}

}  // namespace mvcalib
