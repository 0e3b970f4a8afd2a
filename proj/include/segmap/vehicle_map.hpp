#pragma once

#include "segmap/geometry.hpp"
#include "segmap/observation.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace segmap {

/// A reconstructed object: odometry-frame position and metric size.
struct MapObject {
  Vec3 position = Vec3::Zero();
  double size_m = 0.0;
  int track_len = 0;
  KeyframeId first_kf = 0;
  KeyframeId last_kf = 0;
};

struct VehicleMap {
  std::vector<MapObject> objects;
  std::string frame_id = "odom";
  std::uint64_t params_hash = 0;

  std::size_t size() const { return objects.size(); }
  bool empty() const { return objects.empty(); }
};

}  // namespace segmap
