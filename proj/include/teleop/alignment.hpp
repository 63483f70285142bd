#pragma once

// Binding of human wrist frames to robot end-effector frames at engage time.
//
// Every mode maps a human wrist pose H_t of one side to a target as
//   position:    R0.p + M (H_t.p - H0.p)
//   orientation: R0.q * H0.q^-1 * H_t.q
// where H0 / R0 are that side's human and robot poses captured at engage and
// M is the mode's anchor rotation:
//   ALIGN_SEPARATELY  M = R0.q * H0.q^-1 of the same side (relative motion per arm)
//   ALIGN_CENTER      M = I: one shared world translation anchored at the midpoints,
//                     so inter-hand displacement changes carry over unchanged
//   ALIGN_LEFT/RIGHT  M taken from the named side and applied to both
// so the mapped target equals the robot pose at engage in every mode.

#include <optional>
#include <string>

#include <Eigen/Core>

#include "teleop/pose.hpp"
#include "teleop/retargeting.hpp"

namespace teleop {

enum class AlignmentMode { kSeparately, kCenter, kLeft, kRight };

AlignmentMode parse_alignment_mode(const std::string& text);  // throws std::invalid_argument
const char* alignment_mode_name(AlignmentMode mode);

struct EngagePoses {
  std::optional<Pose> human_left;
  std::optional<Pose> human_right;
  std::optional<Pose> robot_left;
  std::optional<Pose> robot_right;
};

class FrameAlignment {
 public:
  /// Throws std::invalid_argument when a hand the mode needs is missing.
  static FrameAlignment engage(AlignmentMode mode, const EngagePoses& poses);

  AlignmentMode mode() const { return mode_; }
  bool has(Side side) const { return sides_[index(side)].engaged; }
  Pose map(Side side, const Pose& human_wrist) const;

  const Pose& human_initial(Side side) const { return sides_[index(side)].human0; }
  const Pose& robot_initial(Side side) const { return sides_[index(side)].robot0; }
  /// Shared translation between the human and robot anchors (midpoints for
  /// ALIGN_CENTER, the named hand for ALIGN_LEFT/RIGHT, zero otherwise).
  const Eigen::Vector3d& anchor_offset() const { return anchor_offset_; }

 private:
  struct SideBinding {
    bool engaged = false;
    Pose human0;
    Pose robot0;
    Eigen::Matrix3d position_map = Eigen::Matrix3d::Identity();
  };
  static int index(Side side) { return side == Side::kLeft ? 0 : 1; }

  AlignmentMode mode_ = AlignmentMode::kSeparately;
  SideBinding sides_[2];
  Eigen::Vector3d anchor_offset_ = Eigen::Vector3d::Zero();
};

}  // namespace teleop
