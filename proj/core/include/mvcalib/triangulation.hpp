#pragma once

#include <vector>

#include "mvcalib/geometry.hpp"

namespace mvcalib {

/// SIFT-style descriptor.
using Descriptor = Eigen::Matrix<double, 128, 1>;

/// One feature observation of a 3D point in a particular image.
struct Observation {
  int image_id = -1;
  int feature_id = -1;
  NormalizedPoint x;
  Descriptor descriptor = Descriptor::Zero();
};

/// A reconstructed 3D point together with the observations that support it.
/// At most one observation per image; at least two at creation and three
/// once pruning has run.
struct ModelPoint {
  WorldPoint X = WorldPoint::Zero();
  std::vector<Observation> support;
};

/// Midpoint of the common perpendicular of the two back-projected rays.
/// Throws ParallelRays (parallel rays or zero baseline) and BehindCamera.
WorldPoint triangulate_two_view(const CameraPose& pose_a, const CameraPose& pose_b,
                                const NormalizedPoint& xa, const NormalizedPoint& xb);

/// Linear least-squares over all back-projected rays followed by five
/// cost-guarded Gauss-Newton steps on the total squared reprojection error.
/// Throws ParallelRays and BehindCamera.
WorldPoint triangulate_nview(const std::vector<CameraPose>& poses,
                             const std::vector<NormalizedPoint>& xs);

/// Euclidean distance || pi(R(X - T)) - x || in normalized units.
/// Throws BehindCamera for non-positive depth.
double reprojection_error(const CameraPose& pose, const WorldPoint& X, const NormalizedPoint& x);

/// True iff the descriptor distance is strictly below tau_desc.
bool visually_compatible(const Descriptor& d1, const Descriptor& d2, double tau_desc);

/// True iff the point reprojects within tau_reproj (strict) at positive depth.
bool geometrically_compatible(const ModelPoint& point, const CameraPose& pose,
                              const NormalizedPoint& x, double tau_reproj);

}  // namespace mvcalib
