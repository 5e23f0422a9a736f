#pragma once

#include <string>
#include <vector>

#include "mvcalib/geometry.hpp"
#include "mvcalib/pipeline.hpp"

namespace mvcalib {

/// A ground-truth camera read from a dataset file, converted to the
/// x = R(X - T) convention.
struct GroundTruthCamera {
  enum class Source { middlebury, strecha };

  std::string name;
  Mat3 K = Mat3::Identity();
  CameraPose pose;
  Source source = Source::middlebury;
  int width = 0;
  int height = 0;
};

/// Middlebury-style parameter file: a camera count, then per line the image
/// name, nine K entries, nine R entries and three t entries in the
/// x = K [R | t] X convention. The stored t becomes the center T = -R^T t.
/// Throws ParseError.
std::vector<GroundTruthCamera> load_middlebury_par(const std::string& path);
void save_middlebury_par(const std::vector<GroundTruthCamera>& cameras, const std::string& path);

/// Strecha-style per-image camera file: K (three rows), a distortion line,
/// the camera-to-world rotation (three rows), the camera center, and the
/// image resolution. Throws ParseError.
GroundTruthCamera load_strecha_camera(const std::string& path);
void save_strecha_camera(const GroundTruthCamera& camera, const std::string& path);

/// ASCII PLY with model points and camera centers as colored vertices
/// (cameras black, points light gray). Throws IoError.
void export_ply(const Reconstruction& rec, const std::string& path);

/// Estimated poses: one text file per image (three R rows then the T row)
/// plus a manifest mapping image ids to files and recording failures.
/// Values round-trip losslessly. Throws IoError / ParseError.
void save_poses(const Reconstruction& rec, const std::string& directory);
Reconstruction load_poses(const std::string& directory);

/// Whitespace-separated intrinsics file:
/// fx fy cx cy skew k1 k2 p1 p2, with '#' comment lines. Throws ParseError.
CameraIntrinsics load_intrinsics(const std::string& path);
void save_intrinsics(const CameraIntrinsics& intr, const std::string& path);

}  // namespace mvcalib
