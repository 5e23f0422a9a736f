#pragma once

#include <cstdint>
#include <vector>

#include "mvcalib/essential.hpp"
#include "mvcalib/p3p.hpp"

namespace mvcalib {

/// Parameters for the consensus loops. The inlier threshold is expressed in
/// normalized-coordinate units; the relative-pose loop compares Sampson
/// errors against its square.
struct RansacParams {
  int max_iterations = 1000;
  double inlier_threshold = 1e-3;
  double confidence = 0.999;
  int min_inliers = 6;
  std::uint64_t rng_seed = 0;

  static RansacParams relative_defaults() {
    RansacParams p;
    p.max_iterations = 1000;
    p.min_inliers = 10;
    return p;
  }

  static RansacParams absolute_defaults() {
    RansacParams p;
    p.max_iterations = 500;
    p.min_inliers = 6;
    return p;
  }
};

template <typename Model>
struct ConsensusResult {
  Model model;
  std::vector<int> inlier_indices;  // ascending indices into the input list
  int iterations_run = 0;
};

/// Winning relative-pose model: the essential matrix and its decomposition.
struct RelativePoseModel {
  EssentialMatrix E;
  RelativePose pose;
};

/// RANSAC with the 5-point solver. Scores candidates by Sampson error
/// against threshold^2, keeps the largest consensus, and re-decomposes the
/// winning essential matrix over its inlier set. The iteration bound adapts
/// with the standard confidence rule. Throws NotEnoughMatches, NoConsensus.
ConsensusResult<RelativePoseModel> ransac_relative_pose(
    const std::vector<Correspondence2D2D>& matches, const RansacParams& params);

/// RANSAC with the Finsterwalder P3P solver; every candidate pose of each
/// sample is scored by reprojection error over all correspondences.
/// Throws NotEnoughMatches, NoConsensus.
ConsensusResult<CameraPose> ransac_absolute_pose(const std::vector<Correspondence2D3D>& corrs,
                                                 const RansacParams& params);

}  // namespace mvcalib
