#include "mvcalib/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mvcalib {

namespace {

constexpr double kDescriptorNorm = 512.0;
constexpr double kJitterFraction = 0.05;
constexpr double kImageWidth = 640.0;
constexpr double kImageHeight = 480.0;

CameraIntrinsics default_intrinsics() {
  CameraIntrinsics intr;
  intr.fx = 700.0;
  intr.fy = 700.0;
  intr.cx = kImageWidth / 2.0;
  intr.cy = kImageHeight / 2.0;
  return intr;
}

Descriptor random_descriptor(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Descriptor d;
  for (int i = 0; i < 128; ++i) d(i) = gauss(rng);
  d *= kDescriptorNorm / d.norm();
  return d;
}

Descriptor jittered(const Descriptor& prototype, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> mag(0.0, kJitterFraction * kDescriptorNorm);
  Descriptor dir;
  for (int i = 0; i < 128; ++i) dir(i) = gauss(rng);
  dir.normalize();
  return prototype + mag(rng) * dir;
}

// Gaussian pixel noise with its Euclidean magnitude clipped at 3 sigma.
Vec2 clipped_noise(double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return Vec2::Zero();
  std::normal_distribution<double> gauss(0.0, sigma);
  Vec2 n(gauss(rng), gauss(rng));
  const double limit = 3.0 * sigma;
  if (n.norm() > limit) n *= limit / n.norm();
  return n;
}

// World-to-camera rotation for a camera at center looking towards target.
Mat3 look_at(const Vec3& center, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - center).normalized();
  Vec3 x = up.cross(z);
  if (x.norm() < 1e-9) x = Vec3::UnitX();
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.row(0) = x;
  R.row(1) = y;
  R.row(2) = z;
  return R;
}

// Projects every visible ground-truth point into every camera, applies
// noise and descriptor jitter, appends outliers, and shuffles each image's
// feature order.
void populate_features(SyntheticScene* scene, std::mt19937_64& rng) {
  std::vector<Descriptor> prototypes;
  prototypes.reserve(scene->gt_points.size());
  for (size_t i = 0; i < scene->gt_points.size(); ++i) {
    prototypes.push_back(random_descriptor(rng));
  }

  std::uniform_real_distribution<double> ux(0.0, kImageWidth);
  std::uniform_real_distribution<double> uy(0.0, kImageHeight);
  std::uniform_real_distribution<double> uscale(2.0, 6.0);
  std::uniform_real_distribution<double> uorient(-std::numbers::pi, std::numbers::pi);

  for (size_t cam = 0; cam < scene->gt_poses.size(); ++cam) {
    FeatureSet fs;
    fs.image_id = static_cast<int>(cam);
    std::vector<int> origin;

    for (size_t p = 0; p < scene->gt_points.size(); ++p) {
      const Vec3 y = scene->gt_poses[cam].camera_frame(scene->gt_points[p]);
      if (y.z() <= 0.1) continue;
      const NormalizedPoint ideal{y.x() / y.z(), y.y() / y.z()};
      const Vec2 pixel =
          normalized_to_pixel(ideal, scene->intrinsics) + clipped_noise(scene->noise_sigma, rng);
      if (pixel.x() < 0.0 || pixel.x() >= kImageWidth || pixel.y() < 0.0 ||
          pixel.y() >= kImageHeight) {
        continue;
      }
      Keypoint kp;
      kp.pixel = pixel;
      kp.normalized = undistort_normalize(pixel, scene->intrinsics);
      kp.scale = uscale(rng);
      kp.orientation = uorient(rng);
      fs.keypoints.push_back(kp);
      fs.descriptors.push_back(jittered(prototypes[p], rng));
      origin.push_back(static_cast<int>(p));
    }

    const int n_inliers = fs.size();
    int n_outliers = 0;
    if (scene->outlier_rate > 0.0) {
      n_outliers = static_cast<int>(
          std::lround(scene->outlier_rate * n_inliers / (1.0 - scene->outlier_rate)));
    }
    for (int o = 0; o < n_outliers; ++o) {
      Keypoint kp;
      kp.pixel = Vec2(ux(rng), uy(rng));
      kp.normalized = undistort_normalize(kp.pixel, scene->intrinsics);
      kp.scale = uscale(rng);
      kp.orientation = uorient(rng);
      fs.keypoints.push_back(kp);
      fs.descriptors.push_back(random_descriptor(rng));
      origin.push_back(-1);
    }

    // shuffle so feature order carries no information
    std::vector<int> perm(fs.size());
    for (int i = 0; i < fs.size(); ++i) perm[i] = i;
    for (int i = fs.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<int> d(0, i);
      std::swap(perm[i], perm[d(rng)]);
    }
    FeatureSet shuffled;
    shuffled.image_id = fs.image_id;
    std::vector<int> shuffled_origin;
    for (int i : perm) {
      shuffled.keypoints.push_back(fs.keypoints[i]);
      shuffled.descriptors.push_back(fs.descriptors[i]);
      shuffled_origin.push_back(origin[i]);
    }

    scene->features.push_back(std::move(shuffled));
    scene->feature_origin.push_back(std::move(shuffled_origin));
  }
}

}  // namespace

SyntheticScene generate_ring(int n_cameras, double step_deg, int n_points, double noise_sigma,
                             double outlier_rate, std::uint64_t seed) {
  SyntheticScene scene;
  scene.intrinsics = default_intrinsics();
  scene.noise_sigma = noise_sigma;
  scene.outlier_rate = outlier_rate;
  scene.rng_seed = seed;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  constexpr double kCloudRadius = 2.0;
  scene.gt_points.reserve(n_points);
  while (static_cast<int>(scene.gt_points.size()) < n_points) {
    const Vec3 p(unit(rng), unit(rng), unit(rng));
    if (p.norm() <= 1.0) scene.gt_points.push_back(kCloudRadius * p);
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : scene.gt_points) centroid += p;
  centroid /= static_cast<double>(n_points);

  constexpr double kRingRadius = 10.0;
  const double step = step_deg * std::numbers::pi / 180.0;
  for (int i = 0; i < n_cameras; ++i) {
    const double angle = i * step;
    CameraPose pose;
    pose.T = centroid + Vec3(kRingRadius * std::cos(angle), kRingRadius * std::sin(angle), 0.0);
    pose.R = look_at(pose.T, centroid, Vec3::UnitZ());
    scene.gt_poses.push_back(pose);
  }

  populate_features(&scene, rng);
  return scene;
}

SyntheticScene generate_wall(int n_cameras, int n_points, double relief, double noise_sigma,
                             double outlier_rate, std::uint64_t seed) {
  SyntheticScene scene;
  scene.intrinsics = default_intrinsics();
  scene.noise_sigma = noise_sigma;
  scene.outlier_rate = outlier_rate;
  scene.rng_seed = seed;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-3.5, 3.5);
  std::uniform_real_distribution<double> uy(-2.5, 2.5);
  std::uniform_real_distribution<double> ur(-1.0, 1.0);

  constexpr double kWallDepth = 8.0;
  scene.gt_points.reserve(n_points);
  for (int i = 0; i < n_points; ++i) {
    scene.gt_points.push_back(Vec3(ux(rng), uy(rng), kWallDepth + relief * ur(rng)));
  }

  // lateral track centered on the wall, facing +z
  const double span = 3.0;
  for (int i = 0; i < n_cameras; ++i) {
    const double t = n_cameras > 1 ? static_cast<double>(i) / (n_cameras - 1) : 0.5;
    CameraPose pose;
    pose.T = Vec3(-span / 2.0 + span * t, 0.0, 0.0);
    pose.R = Mat3::Identity();
    scene.gt_poses.push_back(pose);
  }

  populate_features(&scene, rng);
  return scene;
}

}  // namespace mvcalib
