#pragma once

// Line-delimited recording of bimanual hand frames.
//
//   # teleop-recording v1 keypoints=thumb_tip,index_tip,...
//   <t> L <wx wy wz> <qw qx qy qz> <k1x k1y k1z> ... R <wx wy wz> <qw qx qy qz> <k...>
//
// One frame pair per line; fields separated by whitespace; keypoints in the
// header's label order, expressed in the wrist frame.

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "teleop/retargeting.hpp"

namespace teleop {

class RecordingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BimanualFrame {
  double timestamp = 0.0;
  HandFrame left;
  HandFrame right;

  const HandFrame& hand(Side side) const { return side == Side::kLeft ? left : right; }
};

struct Recording {
  std::vector<std::string> labels;
  std::vector<BimanualFrame> frames;
};

/// Parses a recording. Malformed lines and non-increasing timestamps raise
/// RecordingError naming the line. Non-finite keypoint values are kept (the
/// retargeter skips such frames).
Recording parse_recording(std::istream& in);
Recording replay_load(const std::filesystem::path& path);

void write_recording(std::ostream& out, const Recording& recording);
void write_recording(const std::filesystem::path& path, const Recording& recording);

/// Per-frame joint vectors written by `teleop retarget` and `teleop synth --truth`:
///   # teleop-joints v1 joints=j1,j2,...
///   <t> <q1> ... <qk> [skipped]
struct JointTrajectory {
  std::vector<std::string> joints;
  std::vector<double> timestamps;
  std::vector<Eigen::VectorXd> q;
  std::vector<bool> skipped;
};

JointTrajectory read_joint_trajectory(const std::filesystem::path& path);
void write_joint_trajectory(const std::filesystem::path& path, const JointTrajectory& trajectory);

/// Delivers frames paced to their timestamps divided by `rate`. A rate of 0
/// delivers them back to back.
class ReplayPlayer {
 public:
  ReplayPlayer(const Recording& recording, double rate);

  std::optional<BimanualFrame> next();
  std::size_t position() const { return next_; }

 private:
  const Recording* recording_;
  double rate_;
  std::size_t next_ = 0;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace teleop
