#include "mvcalib/matching.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace mvcalib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Squared-distance nearest and second-nearest of d among the candidates.
void two_nearest(const Descriptor& d, const std::vector<Descriptor>& candidates, int* best,
                 double* best_sq, double* second_sq) {
  *best = -1;
  *best_sq = kInf;
  *second_sq = kInf;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const double sq = (candidates[i] - d).squaredNorm();
    if (sq < *best_sq) {
      *second_sq = *best_sq;
      *best_sq = sq;
      *best = static_cast<int>(i);
    } else if (sq < *second_sq) {
      *second_sq = sq;
    }
  }
}

}  // namespace

std::vector<PutativeMatch> match_ratio_test(const FeatureSet& fa, const FeatureSet& fb,
                                            double theta) {
  std::vector<PutativeMatch> matches;
  const double theta_sq = theta * theta;
  for (int i = 0; i < fa.size(); ++i) {
    int best = -1;
    double best_sq = kInf, second_sq = kInf;
    two_nearest(fa.descriptors[i], fb.descriptors, &best, &best_sq, &second_sq);
    if (best < 0) continue;
    // second >= theta * nearest, compared in the squared domain
    if (second_sq >= theta_sq * best_sq) {
      matches.push_back(PutativeMatch{i, best, std::sqrt(best_sq)});
    }
  }
  return matches;
}

std::vector<ModelMatch> match_2d3d(const FeatureSet& features,
                                   const std::vector<ModelPoint>& model, double theta) {
  std::vector<ModelMatch> matches;
  const double theta_sq = theta * theta;
  for (int i = 0; i < features.size(); ++i) {
    const Descriptor& d = features.descriptors[i];
    int best_point = -1;
    double best_sq = kInf, second_sq = kInf;
    for (size_t j = 0; j < model.size(); ++j) {
      double point_sq = kInf;
      for (const auto& obs : model[j].support) {
        point_sq = std::min(point_sq, (obs.descriptor - d).squaredNorm());
      }
      if (point_sq < best_sq) {
        second_sq = best_sq;
        best_sq = point_sq;
        best_point = static_cast<int>(j);
      } else if (point_sq < second_sq) {
        second_sq = point_sq;
      }
    }
    if (best_point < 0) continue;
    if (second_sq >= theta_sq * best_sq) {
      matches.push_back(ModelMatch{i, best_point, std::sqrt(best_sq)});
    }
  }
  return matches;
}

std::vector<Correspondence2D3D> to_correspondences(const FeatureSet& features,
                                                   const std::vector<ModelPoint>& model,
                                                   const std::vector<ModelMatch>& matches) {
  std::vector<Correspondence2D3D> corrs;
  corrs.reserve(matches.size());
  for (const auto& m : matches) {
    corrs.push_back(Correspondence2D3D{features.keypoints[m.feature_id].normalized,
                                       model[m.point_id].X});
  }
  return corrs;
}

std::vector<Observation> guided_match(const Observation& fk,
                                      const std::vector<GuidedCandidate>& candidate_images,
                                      const CameraPose& current_pose, int k, double tau_desc,
                                      double tau_reproj) {
  std::vector<Observation> out;
  if (k <= 0) return out;

  for (const auto& candidate : candidate_images) {
    const FeatureSet& fs = *candidate.features;

    // k nearest descriptors in this image
    std::vector<std::pair<double, int>> dist_sq(fs.size());
    for (int i = 0; i < fs.size(); ++i) {
      dist_sq[i] = {(fs.descriptors[i] - fk.descriptor).squaredNorm(), i};
    }
    const int keep = std::min<int>(k, fs.size());
    std::partial_sort(dist_sq.begin(), dist_sq.begin() + keep, dist_sq.end());

    for (int r = 0; r < keep; ++r) {
      const int i = dist_sq[r].second;
      if (!visually_compatible(fs.descriptors[i], fk.descriptor, tau_desc)) continue;

      try {
        const WorldPoint X = triangulate_two_view(current_pose, candidate.pose, fk.x,
                                                  fs.keypoints[i].normalized);
        if (reprojection_error(current_pose, X, fk.x) >= tau_reproj) continue;
        if (reprojection_error(candidate.pose, X, fs.keypoints[i].normalized) >= tau_reproj) {
          continue;
        }
      } catch (const Error&) {
        continue;  // parallel rays or behind a camera
      }
      out.push_back(fs.observation(i));
    }
  }
  return out;
}

namespace {

// Slurps a file through zlib, which transparently handles both plain and
// gzip-compressed streams.
std::string read_file_maybe_gz(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) {
    throw ParseError("cannot open " + path);
  }
  std::string data;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) {
    data.append(buf, static_cast<size_t>(n));
  }
  const bool bad = n < 0;
  gzclose(f);
  if (bad) {
    throw ParseError("corrupt stream in " + path);
  }
  return data;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

FeatureSet load_features(const std::string& path, const CameraIntrinsics& intr) {
  std::istringstream in(read_file_maybe_gz(path));

  long long count = 0;
  int dim = 0;
  if (!(in >> count >> dim) || count < 0) {
    throw ParseError("bad feature file header in " + path);
  }
  if (dim != 128) {
    throw DimensionMismatch("descriptor dimension " + std::to_string(dim) + " in " + path);
  }

  FeatureSet fs;
  fs.keypoints.reserve(static_cast<size_t>(count));
  fs.descriptors.reserve(static_cast<size_t>(count));
  for (long long i = 0; i < count; ++i) {
    Keypoint kp;
    if (!(in >> kp.pixel.x() >> kp.pixel.y() >> kp.scale >> kp.orientation)) {
      throw ParseError("truncated keypoint record in " + path);
    }
    Descriptor d;
    for (int j = 0; j < 128; ++j) {
      if (!(in >> d(j))) {
        throw ParseError("truncated descriptor in " + path);
      }
    }
    kp.normalized = undistort_normalize(kp.pixel, intr);
    fs.keypoints.push_back(kp);
    fs.descriptors.push_back(d);
  }
  return fs;
}

void save_features(const FeatureSet& features, const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  out << features.size() << " 128\n";
  for (int i = 0; i < features.size(); ++i) {
    const Keypoint& kp = features.keypoints[i];
    out << kp.pixel.x() << ' ' << kp.pixel.y() << ' ' << kp.scale << ' ' << kp.orientation
        << '\n';
    const Descriptor& d = features.descriptors[i];
    for (int j = 0; j < 128; ++j) {
      out << d(j) << ((j + 1) % 8 == 0 ? '\n' : ' ');
    }
  }
  const std::string data = out.str();

  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot write " + path);
    const int written = gzwrite(f, data.data(), static_cast<unsigned>(data.size()));
    gzclose(f);
    if (written != static_cast<int>(data.size())) throw IoError("short write to " + path);
  } else {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot write " + path);
    const size_t written = std::fwrite(data.data(), 1, data.size(), f);
    std::fclose(f);
    if (written != data.size()) throw IoError("short write to " + path);
  }
}

}  // namespace mvcalib
