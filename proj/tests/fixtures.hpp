#pragma once

#include "segmap/geometry.hpp"
#include "segmap/observation.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace fixtures {

using namespace segmap;

// Nadir camera at (x, y, z): image +X along world +x, image +Y along world -y.
inline Pose nadir(double x, double y, double z) {
  Pose p;
  p.rotation << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  p.translation = Vec3(x, y, z);
  return p;
}

inline CameraIntrinsics camera() { return {500.0, 500.0, 320.0, 240.0, 640, 480}; }

inline SegmentObservation blob(const Vec2& c, double size_px) {
  SegmentObservation o;
  o.centroid = c;
  o.covariance = size_px * size_px * Mat2::Identity();
  o.size_px = size_px;
  o.pixel_count = 50;
  return o;
}

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("segmap_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace fixtures
