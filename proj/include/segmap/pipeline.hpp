#pragma once

#include "segmap/alignment.hpp"
#include "segmap/config.hpp"
#include "segmap/simulator.hpp"
#include "segmap/vehicle_map.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace segmap {

struct MappingResult {
  VehicleMap map;
  std::size_t completed_tracks = 0;
  std::size_t dropped_tracks = 0;  ///< retired with too few observations
  std::size_t diverged = 0;
  std::size_t too_short = 0;
};

/// Tracking plus per-track reconstruction of one observation log.
MappingResult map_from_log(const FlightLog& log, const PipelineConfig& cfg);

/// A straight survey pass along the middle of a long strip of objects.
/// The defaults give a 200 m x 20 m footprint from 100 m up, so consecutive
/// keyframes overlap heavily and objects stay in view for about ten of them.
struct SurveyScenario {
  std::size_t objects = 1000;
  double length = 5000.0;  ///< meters along x
  double width = 200.0;    ///< meters across, centered on y = 0
  double relief = 10.0;    ///< object heights in [0, relief]
  double extent_min = 1.0;
  double extent_max = 10.0;
  double altitude = 100.0;
  double run_in = 100.0;   ///< flown before and after the strip
  double lateral_offset = 0.0;
  CameraIntrinsics camera{1000.0, 1000.0, 1000.0, 100.0, 2000, 200};
  NoiseModel noise = default_noise();

  static NoiseModel default_noise() {
    NoiseModel n;
    n.centroid_sigma = 3.0;
    n.detection_prob = 0.9;
    n.size_jitter = 0.05;
    n.odom_drift_sigma = 1e-4;
    n.odom_rot_drift_sigma = 1e-4;
    return n;
  }

  Region region() const;
  FlightSpec flight(double keyframe_spacing) const;
};

SimWorld survey_world(const SurveyScenario& s, std::uint64_t seed);
SimulatedFlight survey_flight(const SurveyScenario& s, const SimWorld& world, double keyframe_spacing,
                              std::uint64_t seed);

/// Hypothesis report: one row per window pair. Angles and translation are
/// "nan" when no transform was estimated.
void write_hypotheses_csv(std::ostream& out, std::span<const AlignmentHypothesis> hyps);
/// Reads a report back; selected associations become placeholders so only
/// score() is meaningful, and the angular gate is re-evaluated at alpha_lim.
std::vector<AlignmentHypothesis> read_hypotheses_csv(std::istream& in, double alpha_lim);

}  // namespace segmap
