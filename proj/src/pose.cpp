#include "teleop/pose.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace teleop {

Pose::Pose(const Eigen::Vector3d& position, const Eigen::Quaterniond& orientation)
    : position_(position), orientation_(orientation) {
  const double norm = orientation_.norm();
  if (!std::isfinite(norm) || norm < 1e-12) {
    throw std::invalid_argument("pose orientation must be a nonzero finite quaternion");
  }
  if (!position_.allFinite()) {
    throw std::invalid_argument("pose position must be finite");
  }
  orientation_.coeffs() /= norm;
}

Pose Pose::from_wxyz(const Eigen::Vector3d& position, double w, double x, double y, double z) {
  return Pose(position, Eigen::Quaterniond(w, x, y, z));
}

Pose Pose::from_isometry(const Eigen::Isometry3d& transform) {
  return Pose(transform.translation(), Eigen::Quaterniond(transform.linear()));
}

Eigen::Isometry3d Pose::to_isometry() const {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = orientation_.toRotationMatrix();
  t.translation() = position_;
  return t;
}

Pose Pose::inverse() const {
  const Eigen::Quaterniond inv = orientation_.conjugate();
  return Pose(-(inv * position_), inv);
}

Pose Pose::operator*(const Pose& rhs) const {
  return Pose(position_ + orientation_ * rhs.position_, orientation_ * rhs.orientation_);
}

Eigen::Vector3d Pose::transform_point(const Eigen::Vector3d& p) const {
  return position_ + orientation_ * p;
}

double rotation_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  // atan2 form stays accurate near zero, unlike acos of the dot product.
  const Eigen::Quaterniond rel = a.conjugate() * b;
  const double vec = rel.vec().norm();
  return 2.0 * std::atan2(vec, std::abs(rel.w()));
}

bool poses_equal(const Pose& a, const Pose& b, double position_tol, double angle_tol) {
  return (a.position() - b.position()).norm() <= position_tol &&
         rotation_angle(a.orientation(), b.orientation()) <= angle_tol;
}

}  // namespace teleop
