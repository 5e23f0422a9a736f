#pragma once

#include <cstdint>
#include <vector>

#include "mvcalib/geometry.hpp"
#include "mvcalib/matching.hpp"

namespace mvcalib {

/// A generated ground-truth scene with per-image feature sets. Every
/// feature either projects a ground-truth point (its index recorded in
/// feature_origin) or is an outlier (-1). Regeneration from the same seed
/// is bit-identical.
struct SyntheticScene {
  CameraIntrinsics intrinsics;
  std::vector<CameraPose> gt_poses;
  std::vector<WorldPoint> gt_points;
  std::vector<FeatureSet> features;
  std::vector<std::vector<int>> feature_origin;  // per image, per feature
  double outlier_rate = 0.0;
  double noise_sigma = 0.0;  // pixels
  std::uint64_t rng_seed = 0;
};

/// Cameras every step_deg on a ring around a random point cloud, all
/// looking at its centroid. Inlier descriptors of one point are the same
/// prototype with small seeded jitter; noise is Gaussian in pixels with its
/// magnitude clipped at 3 sigma; outliers get random positions and fresh
/// descriptors.
SyntheticScene generate_ring(int n_cameras, double step_deg, int n_points, double noise_sigma,
                             double outlier_rate, std::uint64_t seed);

/// Points on a fronto-parallel wall (plus optional relief along its normal),
/// cameras translating laterally. relief = 0 produces a strictly planar
/// scene.
SyntheticScene generate_wall(int n_cameras, int n_points, double relief, double noise_sigma,
                             double outlier_rate, std::uint64_t seed);

}  // namespace mvcalib
