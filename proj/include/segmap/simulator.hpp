#pragma once

#include "segmap/observation.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace segmap {

struct WorldObject {
  Vec3 position = Vec3::Zero();
  double extent = 1.0;  ///< meters; the simulated mask size is f * extent / depth pixels
  std::int64_t stable_id = 0;
};

struct Region {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  double area() const { return (max.x() - min.x()) * (max.y() - min.y()); }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

struct SimWorld {
  std::vector<WorldObject> objects;
  Region region;
  std::uint64_t seed = 0;
};

struct FlightSpec {
  std::vector<Vec3> waypoints;
  double speed = 10.0;          ///< m/s, only drives timestamps
  double pitch_deg = -90.0;     ///< camera pitch; -90 looks straight down
  double keyframe_spacing = 2.0;
};

struct NoiseModel {
  double centroid_sigma = 0.0;   ///< pixels, per axis
  double detection_prob = 1.0;
  double size_jitter = 0.0;      ///< lognormal sigma of the pixel size
  double odom_drift_sigma = 0.0;      ///< meters per meter traveled, per axis
  double odom_rot_drift_sigma = 0.0;  ///< degrees per meter traveled, per axis
  /// Optional per-object appearance descriptors (0 disables).
  int descriptor_dim = 0;
  int descriptors_per_object = 4;
  double descriptor_noise = 0.05;
};

struct SeasonModel {
  double dropout_frac = 0.0;
  double size_scale_sigma = 0.0;
  double spawn_frac = 0.0;
};

/// Everything the evaluation needs about a simulated traverse.
struct GroundTruth {
  CameraIntrinsics intrinsics;
  double ground_z = 0.0;
  std::vector<KeyframeId> keyframe_ids;
  std::vector<Pose> true_poses;  ///< parallel to keyframe_ids
  /// Stable id of every emitted observation, per keyframe.
  std::vector<std::vector<std::int64_t>> obs_stable_ids;
  std::vector<WorldObject> world;
};

struct SimulatedFlight {
  FlightLog log;
  GroundTruth truth;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform scatter of round(density * area) objects with uniform extents.
SimWorld generate_world(std::uint64_t seed, double density, const Region& region,
                        double extent_min, double extent_max);

/// Drops, rescales and spawns objects; survivors keep their stable ids.
SimWorld perturb_season(const SimWorld& world, const SeasonModel& season, std::uint64_t seed);

/// Camera orientation for travel heading (radians from +x) and pitch.
Mat3 camera_rotation(double heading_rad, double pitch_deg);

/// Flies the waypoints, emitting a keyframe every keyframe_spacing meters.
SimulatedFlight simulate_flight(const SimWorld& world, const FlightSpec& spec,
                                const NoiseModel& noise, const CameraIntrinsics& intr,
                                std::uint64_t seed);

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace segmap
