#include "mvcalib/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mvcalib {

namespace {

// Required iteration count for the standard adaptive stopping rule.
int required_iterations(double inlier_ratio, int sample_size, double confidence,
                        int max_iterations) {
  if (inlier_ratio <= 0.0) return max_iterations;
  const double w_s = std::pow(inlier_ratio, sample_size);
  if (w_s >= 1.0) return 1;
  const double denom = std::log1p(-w_s);
  if (denom >= 0.0) return max_iterations;
  const double n = std::log1p(-confidence) / denom;
  if (!std::isfinite(n) || n >= static_cast<double>(max_iterations)) return max_iterations;
  return std::max(1, static_cast<int>(std::ceil(n)));
}

// Draws k distinct indices from [0, n) by partial Fisher-Yates on a scratch
// index array; deterministic for a given engine state.
template <int K>
std::array<int, K> draw_distinct(std::vector<int>& scratch, std::mt19937_64& rng) {
  const int n = static_cast<int>(scratch.size());
  std::array<int, K> picked{};
  for (int k = 0; k < K; ++k) {
    std::uniform_int_distribution<int> dist(k, n - 1);
    const int j = dist(rng);
    std::swap(scratch[k], scratch[j]);
    picked[k] = scratch[k];
  }
  return picked;
}

}  // namespace

ConsensusResult<RelativePoseModel> ransac_relative_pose(
    const std::vector<Correspondence2D2D>& matches, const RansacParams& params) {
  const int n = static_cast<int>(matches.size());
  if (n < 5) {
    throw NotEnoughMatches("relative pose needs at least 5 matches");
  }

  std::mt19937_64 rng(params.rng_seed);
  std::vector<int> scratch(n);
  for (int i = 0; i < n; ++i) scratch[i] = i;

  const double threshold_sq = params.inlier_threshold * params.inlier_threshold;
  EssentialMatrix best_E;
  int best_count = -1;
  int bound = params.max_iterations;
  int iterations = 0;

  while (iterations < bound) {
    ++iterations;
    const auto idx = draw_distinct<5>(scratch, rng);
    std::array<Correspondence2D2D, 5> sample;
    for (int k = 0; k < 5; ++k) sample[k] = matches[idx[k]];

    std::vector<EssentialMatrix> candidates;
    try {
      candidates = solve_essential_5pt(sample);
    } catch (const DegenerateSample&) {
      continue;
    }

    for (const auto& E : candidates) {
      int count = 0;
      for (const auto& m : matches) {
        if (sampson_error(E, m) < threshold_sq) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best_E = E;
        bound = std::min(bound, required_iterations(static_cast<double>(count) / n, 5,
                                                    params.confidence, params.max_iterations));
      }
    }
  }

  if (best_count < std::max(5, params.min_inliers)) {
    throw NoConsensus("best relative-pose consensus has too few inliers");
  }

  ConsensusResult<RelativePoseModel> result;
  result.iterations_run = iterations;
  std::vector<Correspondence2D2D> inliers;
  for (int i = 0; i < n; ++i) {
    if (sampson_error(best_E, matches[i]) < threshold_sq) {
      result.inlier_indices.push_back(i);
      inliers.push_back(matches[i]);
    }
  }

  result.model.E = best_E;
  try {
    result.model.pose = decompose_essential(best_E, inliers);
  } catch (const AmbiguousCheirality&) {
    throw NoConsensus("winning essential matrix has no cheirality-consistent pose");
  }
  return result;
}

ConsensusResult<CameraPose> ransac_absolute_pose(const std::vector<Correspondence2D3D>& corrs,
                                                 const RansacParams& params) {
  const int n = static_cast<int>(corrs.size());
  if (n < 3) {
    throw NotEnoughMatches("absolute pose needs at least 3 correspondences");
  }

  std::mt19937_64 rng(params.rng_seed);
  std::vector<int> scratch(n);
  for (int i = 0; i < n; ++i) scratch[i] = i;

  auto is_inlier = [&](const CameraPose& pose, const Correspondence2D3D& c) {
    const Vec3 y = pose.camera_frame(c.X);
    if (y.z() <= 0.0) return false;
    return Vec2(y.x() / y.z() - c.x.u, y.y() / y.z() - c.x.v).norm() < params.inlier_threshold;
  };

  CameraPose best_pose;
  int best_count = -1;
  int bound = params.max_iterations;
  int iterations = 0;

  while (iterations < bound) {
    ++iterations;
    const auto idx = draw_distinct<3>(scratch, rng);
    std::array<Correspondence2D3D, 3> sample;
    for (int k = 0; k < 3; ++k) sample[k] = corrs[idx[k]];

    std::vector<CameraPose> candidates;
    try {
      candidates = solve_p3p_finsterwalder(sample);
    } catch (const DegenerateSample&) {
      continue;
    } catch (const NoRealSolution&) {
      continue;
    }

    for (const auto& pose : candidates) {
      int count = 0;
      for (const auto& c : corrs) {
        if (is_inlier(pose, c)) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best_pose = pose;
        bound = std::min(bound, required_iterations(static_cast<double>(count) / n, 3,
                                                    params.confidence, params.max_iterations));
      }
    }
  }

  if (best_count < std::max(3, params.min_inliers)) {
    throw NoConsensus("best absolute-pose consensus has too few inliers");
  }

  ConsensusResult<CameraPose> result;
  result.model = best_pose;
  result.iterations_run = iterations;
  for (int i = 0; i < n; ++i) {
    if (is_inlier(best_pose, corrs[i])) result.inlier_indices.push_back(i);
  }
  return result;
}

}  // namespace mvcalib
