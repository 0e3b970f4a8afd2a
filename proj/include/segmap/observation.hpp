#pragma once

#include "segmap/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace segmap {

using Descriptor = Eigen::VectorXd;
using KeyframeId = std::int64_t;

/// One segment mask summarized by the first two moments of its pixel
/// coordinates.
struct SegmentObservation {
  Vec2 centroid = Vec2::Zero();
  Mat2 covariance = Mat2::Zero();
  /// sqrt of the largest covariance eigenvalue.
  double size_px = 0.0;
  std::vector<Descriptor> descriptors;
  int pixel_count = 0;
};

/// Largest eigenvalue of a symmetric 2x2 matrix, closed form.
double largest_eigenvalue(const Mat2& m);
double smallest_eigenvalue(const Mat2& m);

/// Checks the PSD/symmetry/size/pixel-count invariants; returns the name of
/// the first violated field or an empty string.
std::string check_observation(const SegmentObservation& obs);

struct Keyframe {
  KeyframeId id = 0;
  double timestamp = 0.0;
  Pose pose;
  /// Mean and standard deviation of tracked feature displacement since the
  /// previous keyframe, pixels.
  double mu_p = 0.0;
  double sigma_p = 1.0;
  std::vector<SegmentObservation> observations;
};

inline constexpr double kMinSigmaP = 1e-3;

struct FlightLog {
  CameraIntrinsics intrinsics;
  int descriptor_dim = 0;
  std::vector<Keyframe> keyframes;
  /// Evaluation-only true poses, parallel to keyframes when present.
  std::optional<std::vector<Pose>> ground_truth_poses;
  std::map<std::string, std::string> meta;
};

}  // namespace segmap
