#pragma once

#include <array>
#include <vector>

#include "mvcalib/geometry.hpp"

namespace mvcalib {

/// An observed 3D point: x is its normalized image location, X its position.
struct Correspondence2D3D {
  NormalizedPoint x;
  WorldPoint X;
};

/// Finsterwalder 3-point absolute pose.
///
/// Reduces the three law-of-cosine equations to a cubic whose real roots
/// split a conic family into line pairs; intersecting the lines with one of
/// the original conics yields the camera-to-point distance ratios, which a
/// Newton polish tightens before closed-form (Horn) absolute orientation
/// recovers each pose. All returned poses place the three points at
/// positive depth and reproject them within 1e-6.
///
/// Throws DegenerateSample (collinear points or coincident rays) and
/// NoRealSolution (no admissible root).
std::vector<CameraPose> solve_p3p_finsterwalder(const std::array<Correspondence2D3D, 3>& sample);

/// Picks the candidate supported by the most extra correspondences with
/// reprojection error below tol; ties fall to the smallest total error.
/// Points behind a candidate camera count as a fixed large error.
CameraPose disambiguate_pose(const std::vector<CameraPose>& candidates,
                             const std::vector<Correspondence2D3D>& extra, double tol);

}  // namespace mvcalib
