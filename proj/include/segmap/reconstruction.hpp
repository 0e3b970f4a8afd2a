#pragma once

#include "segmap/observation.hpp"
#include "segmap/tracker.hpp"
#include "segmap/vehicle_map.hpp"

#include <optional>
#include <span>
#include <vector>

namespace segmap {

struct ReconstructionParams {
  int n_lim = 5;
  double sigma_px = 3.0;
  int max_iters = 50;
  double cost_tol = 1e-9;
  double step_tol = 1e-6;        ///< meters
  double min_parallax_deg = 0.5;

  bool is_valid() const {
    return n_lim > 0 && sigma_px > 0 && max_iters > 0 && cost_tol > 0 && step_tol > 0;
  }
};

/// One observation of a landmark: the camera pose and the measured pixel.
struct PosedObservation {
  Pose pose;
  Vec2 pixel = Vec2::Zero();
  double size_px = 0.0;
};

/// Why a track was rejected.
enum class Divergence { none, too_short, low_parallax, behind_camera, no_convergence };

struct TriangulationResult {
  std::optional<Vec3> position;
  Divergence reason = Divergence::none;
  int iterations = 0;
  double final_cost = 0.0;
  /// Accepted-step costs, starting with the initial cost.
  std::vector<double> cost_history;
};

/// Sum over observations of the squared reprojection error divided by
/// sigma_px^2. Observations behind the camera contribute nothing.
double reprojection_cost(std::span<const PosedObservation> obs, const CameraIntrinsics& intr,
                         double sigma_px, const Vec3& point);

/// Analytic gradient of reprojection_cost with respect to the point.
Vec3 reprojection_gradient(std::span<const PosedObservation> obs, const CameraIntrinsics& intr,
                           double sigma_px, const Vec3& point);

/// Closest-approach midpoint of the rays through the first and last
/// observations; nullopt when the rays are parallel.
std::optional<Vec3> midpoint_triangulation(const PosedObservation& a, const PosedObservation& b,
                                           const CameraIntrinsics& intr);

/// Angle in degrees between the viewing rays of two observations.
double ray_parallax_deg(const PosedObservation& a, const PosedObservation& b,
                        const CameraIntrinsics& intr);

/// Levenberg-Marquardt estimate of a landmark from fixed camera poses.
TriangulationResult triangulate_track(std::span<const PosedObservation> obs,
                                      const CameraIntrinsics& intr,
                                      const ReconstructionParams& params);

/// Mean of size_px * depth / f over the observations in front of the camera;
/// nullopt when none are.
std::optional<double> metric_size(std::span<const PosedObservation> obs, const Vec3& position,
                                  const CameraIntrinsics& intr);

/// Resolves a track's entries against the log's keyframes.
std::vector<PosedObservation> gather_observations(const FlightLog& log, const Track& track);

struct MapBuildResult {
  VehicleMap map;
  std::size_t diverged = 0;
  std::size_t too_short = 0;
};

/// Triangulates each completed track, dropping short and divergent ones, and
/// emits objects in track-creation order.
MapBuildResult build_map(const FlightLog& log, std::span<const Track> tracks,
                         const ReconstructionParams& params, std::uint64_t params_hash = 0);

}  // namespace segmap
