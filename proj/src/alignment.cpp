#include "teleop/alignment.hpp"

#include <stdexcept>

namespace teleop {

AlignmentMode parse_alignment_mode(const std::string& text) {
  if (text == "ALIGN_SEPARATELY") return AlignmentMode::kSeparately;
  if (text == "ALIGN_CENTER") return AlignmentMode::kCenter;
  if (text == "ALIGN_LEFT") return AlignmentMode::kLeft;
  if (text == "ALIGN_RIGHT") return AlignmentMode::kRight;
  throw std::invalid_argument("unknown alignment mode '" + text + "'");
}

const char* alignment_mode_name(AlignmentMode mode) {
  switch (mode) {
    case AlignmentMode::kSeparately: return "ALIGN_SEPARATELY";
    case AlignmentMode::kCenter: return "ALIGN_CENTER";
    case AlignmentMode::kLeft: return "ALIGN_LEFT";
    case AlignmentMode::kRight: return "ALIGN_RIGHT";
  }
  return "?";
}

FrameAlignment FrameAlignment::engage(AlignmentMode mode, const EngagePoses& poses) {
  FrameAlignment a;
  a.mode_ = mode;
  const bool left = poses.human_left && poses.robot_left;
  const bool right = poses.human_right && poses.robot_right;
  switch (mode) {
    case AlignmentMode::kSeparately:
      if (!left && !right) throw std::invalid_argument("ALIGN_SEPARATELY needs at least one hand and arm");
      break;
    case AlignmentMode::kCenter:
      if (!left || !right) throw std::invalid_argument("ALIGN_CENTER needs both hands and both arms");
      break;
    case AlignmentMode::kLeft:
      if (!left) throw std::invalid_argument("ALIGN_LEFT needs the left hand and arm");
      break;
    case AlignmentMode::kRight:
      if (!right) throw std::invalid_argument("ALIGN_RIGHT needs the right hand and arm");
      break;
  }
  if (left) a.sides_[0] = {true, *poses.human_left, *poses.robot_left, Eigen::Matrix3d::Identity()};
  if (right) a.sides_[1] = {true, *poses.human_right, *poses.robot_right, Eigen::Matrix3d::Identity()};

  auto relative = [](const SideBinding& s) { return Eigen::Matrix3d(s.robot0.rotation() * s.human0.rotation().transpose()); };
  switch (mode) {
    case AlignmentMode::kSeparately:
      for (auto& s : a.sides_) {
        if (s.engaged) s.position_map = relative(s);
      }
      break;
    case AlignmentMode::kCenter: {
      const Eigen::Vector3d robot_mid = 0.5 * (a.sides_[0].robot0.position() + a.sides_[1].robot0.position());
      const Eigen::Vector3d human_mid = 0.5 * (a.sides_[0].human0.position() + a.sides_[1].human0.position());
      a.anchor_offset_ = robot_mid - human_mid;
      break;
    }
    case AlignmentMode::kLeft:
    case AlignmentMode::kRight: {
      const SideBinding& anchor = a.sides_[mode == AlignmentMode::kLeft ? 0 : 1];
      const Eigen::Matrix3d m = relative(anchor);
      for (auto& s : a.sides_) s.position_map = m;
      a.anchor_offset_ = anchor.robot0.position() - anchor.human0.position();
      break;
    }
  }
  return a;
}

Pose FrameAlignment::map(Side side, const Pose& human_wrist) const {
  const SideBinding& s = sides_[index(side)];
  if (!s.engaged) throw std::invalid_argument(std::string(side_name(side)) + " side is not engaged");
  const Eigen::Vector3d position = s.robot0.position() + s.position_map * (human_wrist.position() - s.human0.position());
  const Eigen::Quaterniond orientation =
      s.robot0.orientation() * s.human0.orientation().conjugate() * human_wrist.orientation();
  return Pose(position, orientation);
}

}  // namespace teleop
