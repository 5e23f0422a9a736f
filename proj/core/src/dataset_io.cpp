#include "mvcalib/dataset_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mvcalib {

namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open " + path);
  }
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path);
  }
  out.precision(17);
  return out;
}

double read_number(std::istream& in, const std::string& path) {
  double v;
  if (!(in >> v)) {
    throw ParseError("truncated or non-numeric data in " + path);
  }
  return v;
}

Mat3 read_matrix(std::istream& in, const std::string& path) {
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = read_number(in, path);
  }
  return m;
}

}  // namespace

std::vector<GroundTruthCamera> load_middlebury_par(const std::string& path) {
  std::ifstream in = open_input(path);
  long long count;
  if (!(in >> count) || count < 0) {
    throw ParseError("bad camera count in " + path);
  }

  std::vector<GroundTruthCamera> cameras;
  cameras.reserve(static_cast<size_t>(count));
  for (long long i = 0; i < count; ++i) {
    GroundTruthCamera cam;
    cam.source = GroundTruthCamera::Source::middlebury;
    if (!(in >> cam.name)) {
      throw ParseError("missing image name in " + path);
    }
    cam.K = read_matrix(in, path);
    cam.pose.R = read_matrix(in, path);
    Vec3 t;
    t.x() = read_number(in, path);
    t.y() = read_number(in, path);
    t.z() = read_number(in, path);
    cam.pose.T = -cam.pose.R.transpose() * t;
    cameras.push_back(std::move(cam));
  }
  return cameras;
}

void save_middlebury_par(const std::vector<GroundTruthCamera>& cameras, const std::string& path) {
  std::ofstream out = open_output(path);
  out << cameras.size() << "\n";
  for (const auto& cam : cameras) {
    out << cam.name;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << ' ' << cam.K(r, c);
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << ' ' << cam.pose.R(r, c);
    }
    const Vec3 t = -cam.pose.R * cam.pose.T;
    out << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << "\n";
  }
}

GroundTruthCamera load_strecha_camera(const std::string& path) {
  std::ifstream in = open_input(path);
  GroundTruthCamera cam;
  cam.source = GroundTruthCamera::Source::strecha;
  cam.name = fs::path(path).filename().string();

  cam.K = read_matrix(in, path);
  for (int i = 0; i < 3; ++i) read_number(in, path);  // distortion line (unused)
  const Mat3 cam_to_world = read_matrix(in, path);
  cam.pose.R = cam_to_world.transpose();
  cam.pose.T.x() = read_number(in, path);
  cam.pose.T.y() = read_number(in, path);
  cam.pose.T.z() = read_number(in, path);

  long long w, h;
  if (!(in >> w >> h) || w <= 0 || h <= 0) {
    throw ParseError("bad resolution line in " + path);
  }
  cam.width = static_cast<int>(w);
  cam.height = static_cast<int>(h);
  return cam;
}

void save_strecha_camera(const GroundTruthCamera& camera, const std::string& path) {
  std::ofstream out = open_output(path);
  for (int r = 0; r < 3; ++r) {
    out << camera.K(r, 0) << ' ' << camera.K(r, 1) << ' ' << camera.K(r, 2) << "\n";
  }
  out << "0 0 0\n";
  const Mat3 cam_to_world = camera.pose.R.transpose();
  for (int r = 0; r < 3; ++r) {
    out << cam_to_world(r, 0) << ' ' << cam_to_world(r, 1) << ' ' << cam_to_world(r, 2) << "\n";
  }
  out << camera.pose.T.x() << ' ' << camera.pose.T.y() << ' ' << camera.pose.T.z() << "\n";
  out << (camera.width > 0 ? camera.width : 3072) << ' '
      << (camera.height > 0 ? camera.height : 2048) << "\n";
}

void export_ply(const Reconstruction& rec, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path);
  }
  out.precision(9);

  const size_t total = rec.points.size() + rec.registered.size();
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << total << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  for (const auto& p : rec.points) {
    out << p.X.x() << ' ' << p.X.y() << ' ' << p.X.z() << " 200 200 200\n";
  }
  for (int image_id : rec.registered) {
    const Vec3& c = rec.poses.at(image_id).T;
    out << c.x() << ' ' << c.y() << ' ' << c.z() << " 0 0 0\n";
  }
  if (!out) {
    throw IoError("write failure on " + path);
  }
}

void save_poses(const Reconstruction& rec, const std::string& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) {
    throw IoError("cannot create " + directory);
  }

  std::ofstream manifest = open_output((fs::path(directory) / "manifest.txt").string());
  for (int image_id : rec.registered) {
    char name[32];
    std::snprintf(name, sizeof(name), "pose_%04d.txt", image_id);
    std::ofstream out = open_output((fs::path(directory) / name).string());
    const CameraPose& pose = rec.poses.at(image_id);
    for (int r = 0; r < 3; ++r) {
      out << pose.R(r, 0) << ' ' << pose.R(r, 1) << ' ' << pose.R(r, 2) << "\n";
    }
    out << pose.T.x() << ' ' << pose.T.y() << ' ' << pose.T.z() << "\n";
    manifest << image_id << ' ' << name << "\n";
  }
  for (int image_id : rec.failed) {
    manifest << image_id << " FAILED\n";
  }
}

Reconstruction load_poses(const std::string& directory) {
  const std::string manifest_path = (fs::path(directory) / "manifest.txt").string();
  std::ifstream manifest = open_input(manifest_path);

  Reconstruction rec;
  int image_id;
  std::string name;
  while (manifest >> image_id >> name) {
    if (name == "FAILED") {
      rec.failed.push_back(image_id);
      continue;
    }
    const std::string pose_path = (fs::path(directory) / name).string();
    std::ifstream in = open_input(pose_path);
    CameraPose pose;
    pose.R = read_matrix(in, pose_path);
    pose.T.x() = read_number(in, pose_path);
    pose.T.y() = read_number(in, pose_path);
    pose.T.z() = read_number(in, pose_path);
    rec.poses[image_id] = pose;
    rec.registered.push_back(image_id);
  }
  if (rec.registered.empty() && rec.failed.empty()) {
    throw ParseError("empty manifest in " + manifest_path);
  }
  return rec;
}

CameraIntrinsics load_intrinsics(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string text;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    text += line + " ";
  }
  std::istringstream tokens(text);
  CameraIntrinsics intr;
  if (!(tokens >> intr.fx >> intr.fy >> intr.cx >> intr.cy >> intr.skew >> intr.k1 >> intr.k2 >>
        intr.p1 >> intr.p2)) {
    throw ParseError("intrinsics file needs nine values in " + path);
  }
  if (!intr.valid()) {
    throw ParseError("focal lengths must be positive in " + path);
  }
  return intr;
}

void save_intrinsics(const CameraIntrinsics& intr, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "# fx fy cx cy skew k1 k2 p1 p2\n";
  out << intr.fx << ' ' << intr.fy << ' ' << intr.cx << ' ' << intr.cy << ' ' << intr.skew << ' '
      << intr.k1 << ' ' << intr.k2 << ' ' << intr.p1 << ' ' << intr.p2 << "\n";
}

}  // namespace mvcalib
