#pragma once

// Bimanual session: pose stream in, per-frame hand and arm commands out.
//
// Each incoming frame pair is mapped through the engage-time alignment, then
// the up-to-four solvers (left/right hand, left/right arm) run on persistent
// workers and are joined before the next frame. Haptics runs on its own
// worker behind a capacity-1 overwrite slot, so a slow haptics stage drops
// tactile frames instead of delaying control.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "teleop/alignment.hpp"
#include "teleop/arm_control.hpp"
#include "teleop/haptics.hpp"
#include "teleop/profiler.hpp"
#include "teleop/recording.hpp"
#include "teleop/retargeting.hpp"

namespace teleop {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HandSetup {
  RetargetProblem problem;
  Eigen::VectorXd initial_q;
};

struct ArmSetup {
  ArmControlProblem problem;
  Eigen::VectorXd initial_q;
};

struct SideSetup {
  std::optional<ArmSetup> arm;
  std::optional<HandSetup> hand;
};

struct HapticsSetup {
  CalibrationTable table;
  HapticsConfig config;
  std::vector<TactileFrame> frames;  // consumed one per control frame
  double delay_s = 0.0;              // artificial per-frame stall, for isolation tests
};

struct SessionSource {
  std::filesystem::path replay;         // recording file, or
  std::string connect;                  // host:port of a stream server
  double rate = 0.0;                    // replay pacing; 0 = as fast as possible
  std::vector<std::string> labels;      // keypoint labels of a network stream
};

struct SessionConfig {
  AlignmentMode alignment_mode = AlignmentMode::kSeparately;
  double target_rate_hz = 60.0;
  SessionSource source;
  std::array<SideSetup, 2> sides;  // [left, right]
  std::optional<HapticsSetup> haptics;
  bool profiling = true;
  std::filesystem::path output;  // command stream file (optional)
  std::filesystem::path report;  // profile report JSON (optional)

  SideSetup& side(Side s) { return sides[s == Side::kLeft ? 0 : 1]; }
  const SideSetup& side(Side s) const { return sides[s == Side::kLeft ? 0 : 1]; }

  /// Throws ConfigError.
  void validate() const;
};

/// Reads a JSON session description; relative paths resolve against the
/// file's directory. Throws ConfigError (bad structure or values) and
/// ModelError / HapticsError for referenced files.
SessionConfig load_session_config(const std::filesystem::path& path);
SessionConfig parse_session_config(const std::string& text, const std::filesystem::path& base_dir);

/// Human and robot poses captured at engage for every side that has an arm.
EngagePoses engage_poses(const SessionConfig& config, const BimanualFrame& first,
                         const std::array<Eigen::VectorXd, 2>& robot_q);

struct SessionCommand {
  double timestamp = 0.0;
  std::array<std::optional<ArmCommand>, 2> arm;
  std::array<std::optional<RetargetResult>, 2> hand;
  double latency = 0.0;  // seconds from frame arrival to joined commands
};

struct SessionStats {
  std::size_t frames = 0;
  std::size_t malformed_frames = 0;     // rejected before solving
  std::size_t skipped_hand_frames = 0;  // non-finite keypoints
  std::size_t failed_arm_solves = 0;
  std::size_t unconverged_solves = 0;
  std::size_t deadline_misses = 0;      // latency above 1 / target_rate_hz
  std::size_t dropped_frames = 0;       // stream frames superseded before use
  std::size_t haptics_frames = 0;
  std::size_t haptics_dropped = 0;
  double joint_change = 0.0;            // sum over frames after the first of |q_t - q_{t-1}|
};

struct SessionResult {
  std::vector<SessionCommand> commands;
  SessionStats stats;
  ProfileReport report;
  std::vector<std::uint8_t> haptics_bytes;
  std::optional<FrameAlignment> alignment;
  std::string diagnostic;  // set when a stream ended abnormally
};

using CommandSink = std::function<void(const SessionCommand&)>;

/// Runs the configured source to exhaustion. `recording` overrides a replay
/// source that was already loaded.
SessionResult run_session(const SessionConfig& config, const Recording* recording = nullptr,
                          const CommandSink& sink = {});

/// Command stream text: a header, then one line per frame with the joint
/// vectors of every configured solver.
void write_command_header(std::ostream& out, const SessionConfig& config);
void write_command(std::ostream& out, const SessionCommand& command);

}  // namespace teleop
