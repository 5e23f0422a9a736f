#pragma once

#include <map>
#include <string>
#include <vector>

#include "mvcalib/geometry.hpp"
#include "mvcalib/pipeline.hpp"

namespace mvcalib {

/// Per-image pose errors against ground truth, plus the cloud scale factor.
/// C_err is expressed in units of the distance between the first two
/// ground-truth camera centers.
struct PoseErrorReport {
  struct Row {
    int image_id = -1;
    double r_err_deg = 0.0;
    double t_err_deg = 0.0;
    double c_err = 0.0;
  };
  double scale = 1.0;
  std::vector<Row> rows;
};

/// Rotation angle (degrees) aligning the two rotations:
/// acos((tr(R_gt^T R_est) - 1) / 2), with the argument clamped to [-1, 1].
double rotation_error(const Mat3& R_gt, const Mat3& R_est);

/// Angle (degrees) between two translation vectors, scale-free.
/// Throws ZeroVector when either vector is zero.
double translation_angle_error(const Vec3& T_gt, const Vec3& T_est);

/// Closed-form scale between the two center clouds:
/// sqrt(sum ||T_i - T'||^2 / sum ||That_i - That'||^2) over centroids.
/// Throws DegenerateCloud when either cloud has zero spread.
double horn_scale(const std::vector<Vec3>& gt_centers, const std::vector<Vec3>& est_centers);

/// Per-camera ||s * That_i - T_i|| / ||T_0 - T_1|| for already-aligned
/// center lists. Throws DegenerateBaseline when the first two ground-truth
/// centers coincide.
std::vector<double> camera_center_error(const std::vector<Vec3>& gt_centers,
                                        const std::vector<Vec3>& est_centers_aligned, double s);

/// Rigidly transforms every estimated pose so the (gauge-fixed) first
/// camera lands exactly on gt_first_pose.
std::map<int, CameraPose> align_to_gt(const Reconstruction& rec, const CameraPose& gt_first_pose);

/// Full evaluation: rigid alignment on the first camera, camera-1-anchored
/// Horn scale, then per-image rotation, translation-direction and relative
/// center errors. gt is indexed by image id.
/// Throws MissingGroundTruth when a registered image has no entry.
PoseErrorReport evaluate(const Reconstruction& rec, const std::vector<CameraPose>& gt);

/// CSV emission: a "scale,<s>" line, the column header
/// "image_id,R_err_deg,T_err_deg,C_err", then one row per image.
std::string error_report_csv(const PoseErrorReport& report);

}  // namespace mvcalib
