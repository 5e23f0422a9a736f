#pragma once

#include <string>
#include <vector>

#include "mvcalib/geometry.hpp"
#include "mvcalib/p3p.hpp"
#include "mvcalib/triangulation.hpp"

namespace mvcalib {

/// One detected keypoint: pixel location, its undistorted normalized
/// location, and the detector's scale/orientation attributes.
struct Keypoint {
  Vec2 pixel = Vec2::Zero();
  NormalizedPoint normalized;
  double scale = 1.0;
  double orientation = 0.0;
};

/// All features of one image. keypoints and descriptors run in parallel.
struct FeatureSet {
  int image_id = -1;
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;

  int size() const { return static_cast<int>(keypoints.size()); }

  Observation observation(int feature_id) const {
    return Observation{image_id, feature_id, keypoints[feature_id].normalized,
                       descriptors[feature_id]};
  }
};

/// A descriptor-space match between feature_a of the first set and
/// feature_b of the second.
struct PutativeMatch {
  int feature_a = -1;
  int feature_b = -1;
  double distance = 0.0;
};

/// A feature matched against a model point.
struct ModelMatch {
  int feature_id = -1;
  int point_id = -1;
  double distance = 0.0;
};

/// Nearest-neighbour matching under the ratio criterion: a pair survives iff
/// the second-nearest distance is at least theta times the nearest. A lone
/// candidate passes vacuously. At most one match per feature of fa.
std::vector<PutativeMatch> match_ratio_test(const FeatureSet& fa, const FeatureSet& fb,
                                            double theta);

/// Matches image features against model points. Each point is represented
/// by the best (smallest) distance to any of its support descriptors; the
/// ratio test then runs over that pool of per-point distances. At most one
/// correspondence per feature.
std::vector<ModelMatch> match_2d3d(const FeatureSet& features,
                                   const std::vector<ModelPoint>& model, double theta);

/// View of 2D-3D matches as solver correspondences.
std::vector<Correspondence2D3D> to_correspondences(const FeatureSet& features,
                                                   const std::vector<ModelPoint>& model,
                                                   const std::vector<ModelMatch>& matches);

/// Candidate image for guided matching: its features and registered pose.
struct GuidedCandidate {
  const FeatureSet* features = nullptr;
  CameraPose pose;
};

/// For a query observation with known pose, returns up to k descriptor
/// neighbours per candidate image that are visually compatible (tau_desc)
/// and geometrically consistent: their two-view triangulation against the
/// query reprojects within tau_reproj in both views.
std::vector<Observation> guided_match(const Observation& fk,
                                      const std::vector<GuidedCandidate>& candidate_images,
                                      const CameraPose& current_pose, int k, double tau_desc,
                                      double tau_reproj);

/// Reads a feature file: header "N 128", then per keypoint a line
/// "x y scale orientation" followed by 128 descriptor values. Pixel
/// coordinates are undistorted and normalized on load. Files with a .gz
/// suffix (or any gzip stream) are decompressed transparently.
/// Throws ParseError and DimensionMismatch.
FeatureSet load_features(const std::string& path, const CameraIntrinsics& intr);

/// Writes the same format (gzip-compressed when path ends in .gz) with
/// full-precision descriptor values, so a write/load round trip is exact.
void save_features(const FeatureSet& features, const std::string& path);

}  // namespace mvcalib
