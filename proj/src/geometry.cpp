#include "segmap/geometry.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>

namespace segmap {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double wrap_degrees(double deg) {
  // (-180, 180]
  if (deg <= -180.0) deg += 360.0;
  if (deg > 180.0) deg -= 360.0;
  return deg;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

double point_line_distance(const Vec3& line, const Vec2& px) {
  const double n = std::hypot(line.x(), line.y());
  if (n < 1e-300) return 0.0;
  return std::abs(line.x() * px.x() + line.y() * px.y() + line.z()) / n;
}

}  // namespace

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) {
    return false;
  }
  return std::abs(r.determinant() - 1.0) <= tol;
}

Pose Pose::from_quaternion(const Eigen::Quaterniond& q, const Vec3& t,
                           std::string frame) {
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6) {
    throw std::invalid_argument("quaternion norm deviates from 1 by more than 1e-6");
  }
  Pose p;
  p.rotation = q.normalized().toRotationMatrix();
  p.translation = t;
  p.frame_id = std::move(frame);
  p.source_quaternion = q;
  return p;
}

Eigen::Quaterniond Pose::quaternion() const {
  if (source_quaternion && source_quaternion->normalized().toRotationMatrix() == rotation) {
    return *source_quaternion;
  }
  Eigen::Quaterniond q(rotation);
  q.normalize();
  // Canonical hemisphere so that serialization is stable.
  if (q.w() < 0) q.coeffs() *= -1.0;
  return q;
}

bool Pose::is_valid(double tol) const {
  return is_rotation(rotation, tol) && translation.allFinite();
}

bool RigidTransform::is_valid(double tol) const {
  return is_rotation(rotation, tol) && translation.allFinite();
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

Mat3 rotation_x(double deg) {
  return Eigen::AngleAxisd(deg * kDeg, Vec3::UnitX()).toRotationMatrix();
}
Mat3 rotation_y(double deg) {
  return Eigen::AngleAxisd(deg * kDeg, Vec3::UnitY()).toRotationMatrix();
}
Mat3 rotation_z(double deg) {
  return Eigen::AngleAxisd(deg * kDeg, Vec3::UnitZ()).toRotationMatrix();
}
Mat3 rotation_ypr(double yaw_deg, double pitch_deg, double roll_deg) {
  return rotation_z(yaw_deg) * rotation_y(pitch_deg) * rotation_x(roll_deg);
}

std::optional<Vec2> project(const Pose& pose, const CameraIntrinsics& intr,
                            const Vec3& point) {
  const Vec3 pc = pose.to_camera(point);
  if (pc.z() <= 1e-6) return std::nullopt;
  return Vec2(intr.fx * pc.x() / pc.z() + intr.cx,
              intr.fy * pc.y() / pc.z() + intr.cy);
}

Vec3 back_project(const CameraIntrinsics& intr, const Vec2& px) {
  return Vec3((px.x() - intr.cx) / intr.fx, (px.y() - intr.cy) / intr.fy, 1.0);
}

Mat3 fundamental_matrix(const Pose& pose_a, const Pose& pose_b,
                        const CameraIntrinsics& intr) {
  // x_b = R_ba x_a + t_ba in camera coordinates.
  const Mat3 r_ba = pose_b.rotation.transpose() * pose_a.rotation;
  const Vec3 t_ba = pose_b.rotation.transpose() * (pose_a.translation - pose_b.translation);
  if (t_ba.norm() < 1e-9) {
    throw DegenerateBaseline("camera centers coincide; no epipolar constraint");
  }
  const Mat3 essential = skew(t_ba) * r_ba;
  const Mat3 k_inv = intr.matrix().inverse();
  return k_inv.transpose() * essential * k_inv;
}

double epipolar_distance(const Pose& pose_a, const Pose& pose_b,
                         const CameraIntrinsics& intr, const Vec2& px_a,
                         const Vec2& px_b) {
  const Mat3 f = fundamental_matrix(pose_a, pose_b, intr);
  const Vec3 ha(px_a.x(), px_a.y(), 1.0);
  const Vec3 hb(px_b.x(), px_b.y(), 1.0);
  const double d_b = point_line_distance(f * ha, px_b);
  const double d_a = point_line_distance(f.transpose() * hb, px_a);
  return std::max(d_a, d_b);
}

RigidTransform estimate_rigid_transform(std::span<const Vec3> src,
                                        std::span<const Vec3> dst) {
  if (src.size() != dst.size()) {
    throw std::invalid_argument("estimate_rigid_transform: size mismatch");
  }
  if (src.size() < 3) {
    throw DegenerateConfiguration("rigid transform needs at least 3 points");
  }
  const double n = static_cast<double>(src.size());
  Vec3 cs = Vec3::Zero();
  Vec3 cd = Vec3::Zero();
  for (std::size_t k = 0; k < src.size(); ++k) {
    cs += src[k];
    cd += dst[k];
  }
  cs /= n;
  cd /= n;

  Mat3 h = Mat3::Zero();
  for (std::size_t k = 0; k < src.size(); ++k) {
    h += (src[k] - cs) * (dst[k] - cd).transpose();
  }

  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-10 * sv(0)) {
    throw DegenerateConfiguration("point configuration is collinear");
  }
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0 ? -1.0 : 1.0;

  RigidTransform t;
  t.rotation = v * d * u.transpose();
  t.translation = cd - t.rotation * cs;
  return t;
}

EulerAngles euler_zyx(const Mat3& r) {
  EulerAngles e;
  const double s = std::clamp(-r(2, 0), -1.0, 1.0);
  e.pitch = std::asin(s) / kDeg;
  if (std::abs(s) > 1.0 - 1e-12) {
    e.roll = 0.0;
    e.yaw = std::atan2(-r(0, 1), r(1, 1)) / kDeg;
  } else {
    e.roll = std::atan2(r(2, 1), r(2, 2)) / kDeg;
    e.yaw = std::atan2(r(1, 0), r(0, 0)) / kDeg;
  }
  e.roll = wrap_degrees(e.roll);
  e.pitch = wrap_degrees(e.pitch);
  e.yaw = wrap_degrees(e.yaw);
  return e;
}

RollPitch roll_pitch(const RigidTransform& transform) {
  const EulerAngles e = euler_zyx(transform.rotation);
  return {e.roll, e.pitch};
}

}  // namespace segmap
