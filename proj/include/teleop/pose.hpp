#pragma once

#include <Eigen/Geometry>

namespace teleop {

/// Rigid transform stored as position plus unit quaternion (w, x, y, z).
///
/// The quaternion is normalized on construction. q and -q describe the same
/// rotation; every comparison in this library treats them as equal.
class Pose {
 public:
  Pose() = default;
  Pose(const Eigen::Vector3d& position, const Eigen::Quaterniond& orientation);

  static Pose from_wxyz(const Eigen::Vector3d& position, double w, double x, double y, double z);
  static Pose from_isometry(const Eigen::Isometry3d& transform);
  static Pose identity() { return Pose(); }

  const Eigen::Vector3d& position() const { return position_; }
  const Eigen::Quaterniond& orientation() const { return orientation_; }
  Eigen::Matrix3d rotation() const { return orientation_.toRotationMatrix(); }

  Eigen::Isometry3d to_isometry() const;
  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;
  Eigen::Vector3d transform_point(const Eigen::Vector3d& p) const;

 private:
  Eigen::Vector3d position_ = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation_ = Eigen::Quaterniond::Identity();
};

/// Angle of the relative rotation between two orientations, in [0, pi].
double rotation_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

/// Sign-invariant pose comparison.
bool poses_equal(const Pose& a, const Pose& b, double position_tol = 1e-9, double angle_tol = 1e-9);

}  // namespace teleop
