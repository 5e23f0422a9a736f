#pragma once

#include <map>
#include <vector>

#include "mvcalib/bundle_adjust.hpp"
#include "mvcalib/matching.hpp"
#include "mvcalib/ransac.hpp"
#include "mvcalib/triangulation.hpp"

namespace mvcalib {

/// Thresholds and schedules of the incremental reconstruction.
/// tau_desc <= 0 selects the automatic threshold 0.35 x mean descriptor
/// norm of the image being processed.
struct PipelineConfig {
  RansacParams relative_ransac = RansacParams::relative_defaults();
  RansacParams absolute_ransac = RansacParams::absolute_defaults();
  double theta = 1.25;     // nearest-neighbour ratio criterion
  double tau_desc = 0.0;   // visual-compatibility threshold (auto when <= 0)
  double tau_reproj = 2e-3;
  int guided_k = 20;       // descriptor neighbours per candidate image
  int window = 5;          // recently registered images searched by guided matching
  bool refine_all_cameras = true;  // false: bundle adjustment frees only the newest camera
  int ba_max_iters = 50;
  double ba_gradient_tol = 1e-10;
};

/// The growing model: poses keyed by image id, the point cloud, the
/// registration order, and the images that failed to register. The first
/// registered camera holds pose (I, 0) exactly.
struct Reconstruction {
  std::map<int, CameraPose> poses;
  std::vector<ModelPoint> points;
  std::vector<int> registered;
  std::vector<int> failed;
};

/// Two-view initialization: ratio-test matching, relative-pose RANSAC,
/// triangulation of the consensus set, guided matching of additional pairs,
/// then bundle adjustment with the first camera fixed.
/// Throws InitFailed.
Reconstruction init_pair(const FeatureSet& f1, const FeatureSet& f2, const PipelineConfig& cfg);

/// Registers one image against the model: 2D-3D matching, absolute-pose
/// RANSAC, guided matching (new points and support extension), bundle
/// adjustment, then the support recheck that drops incompatible
/// observations and points left with fewer than three images.
/// sequence_features must expose the feature sets of all registered images,
/// indexed by image id. Throws RegistrationFailed.
Reconstruction register_image(const Reconstruction& rec, const FeatureSet& fn,
                              const std::vector<FeatureSet>& sequence_features,
                              const PipelineConfig& cfg);

/// Runs init_pair on the first two images and register_image on the rest in
/// order. Images that fail registration are recorded in failed and skipped.
/// Throws InitFailed only.
Reconstruction run_sequence(const std::vector<FeatureSet>& features, const PipelineConfig& cfg);

}  // namespace mvcalib
