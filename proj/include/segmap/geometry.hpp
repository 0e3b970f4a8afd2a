#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace segmap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Thrown when the relative translation between two views is too small for
/// an epipolar constraint to exist.
class DegenerateBaseline : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a point set cannot fix a rigid transform (fewer than three
/// points or all points collinear).
class DegenerateConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// World-from-camera pose. The camera looks along its local +Z axis, with +X
/// to the image right and +Y to the image bottom.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  std::string frame_id = "odom";
  /// Quaternion this pose was built from, if any. quaternion() returns it
  /// verbatim while it still matches rotation, so logs re-serialize exactly.
  std::optional<Eigen::Quaterniond> source_quaternion;

  /// Builds a pose from a quaternion (w, x, y, z). The quaternion must have
  /// unit norm within 1e-6; it is normalized before conversion.
  static Pose from_quaternion(const Eigen::Quaterniond& q, const Vec3& t,
                              std::string frame = "odom");
  Eigen::Quaterniond quaternion() const;

  /// Point in camera coordinates.
  Vec3 to_camera(const Vec3& world) const {
    return rotation.transpose() * (world - translation);
  }
  Vec3 center() const { return translation; }

  bool is_valid(double tol = 1e-9) const;
};

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  bool is_valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 &&
           cx < width && cy >= 0 && cy < height;
  }
  Mat3 matrix() const;
  double mean_focal() const { return 0.5 * (fx + fy); }
  bool operator==(const CameraIntrinsics&) const = default;
};

/// Maps points of one frame into another: y = rotation * x + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  bool is_valid(double tol = 1e-9) const;
};

bool is_rotation(const Mat3& r, double tol = 1e-9);

/// Rotation about a single world axis, angle in degrees.
Mat3 rotation_x(double deg);
Mat3 rotation_y(double deg);
Mat3 rotation_z(double deg);
/// Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rotation_ypr(double yaw_deg, double pitch_deg, double roll_deg);

/// Pinhole projection. Returns nullopt when the point is at or behind the
/// camera plane (depth <= 1e-6).
std::optional<Vec2> project(const Pose& pose, const CameraIntrinsics& intr,
                            const Vec3& point);

/// Unit-depth ray direction in camera coordinates for a pixel.
Vec3 back_project(const CameraIntrinsics& intr, const Vec2& px);

/// Fundamental matrix mapping pixels of view a to epipolar lines in view b.
Mat3 fundamental_matrix(const Pose& pose_a, const Pose& pose_b,
                        const CameraIntrinsics& intr);

/// Symmetric point-to-epipolar-line distance in pixels: the larger of the
/// distance of px_b to the line induced by px_a and vice versa. Throws
/// DegenerateBaseline when the camera centers coincide (< 1e-9 m).
double epipolar_distance(const Pose& pose_a, const Pose& pose_b,
                         const CameraIntrinsics& intr, const Vec2& px_a,
                         const Vec2& px_b);

/// Least-squares rigid transform with dst[k] ~ T(src[k]) (Arun / Kabsch with
/// reflection correction).
RigidTransform estimate_rigid_transform(std::span<const Vec3> src,
                                        std::span<const Vec3> dst);

struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// Z-Y-X decomposition in degrees, each in (-180, 180]. At gimbal lock the
/// roll is set to zero and the whole in-plane angle goes to yaw.
EulerAngles euler_zyx(const Mat3& rotation);

struct RollPitch {
  double roll = 0.0;
  double pitch = 0.0;
};
RollPitch roll_pitch(const RigidTransform& transform);

}  // namespace segmap
