#pragma once

// Seeded generators for recordings and tactile fixtures used by tests, the
// acceptance suite and `teleop synth`.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "teleop/arm_control.hpp"
#include "teleop/haptics.hpp"
#include "teleop/kinematics.hpp"
#include "teleop/recording.hpp"

namespace teleop {

enum class SynthKind { kReach, kStatic, kPulse };

SynthKind parse_synth_kind(const std::string& text);  // throws std::invalid_argument

/// Hand model used to produce keypoints: each label is a tip frame, and the
/// keypoint is its position in `origin_frame` divided by `scaling`.
struct SynthHand {
  std::shared_ptr<const KinematicModel> model;
  std::string origin_frame;
  std::vector<std::string> tip_frames;
  double scaling = 1.0;
};

struct RecordingSpec {
  SynthKind kind = SynthKind::kReach;
  int frames = 240;
  double rate_hz = 60.0;
  std::uint64_t seed = 1;
  double reach_distance = 0.15;  // meters of wrist travel per hand
  double reach_rotation = 0.3;   // radians of wrist rotation per hand
};

struct SynthRecording {
  Recording recording;
  std::vector<Eigen::VectorXd> left_q;   // ground-truth active q per frame
  std::vector<Eigen::VectorXd> right_q;
};

/// Bimanual recording. Reach: wrists travel monotonically along a seeded
/// direction while the fingers blend between two seeded configurations.
/// Static: every frame is identical. Without a hand model the keypoints are
/// a fixed set of five points.
SynthRecording synth_recording(const RecordingSpec& spec, const SynthHand* hand);

/// Uniform random active configuration within limits shrunk by `margin` of the range.
Eigen::VectorXd random_configuration(const KinematicModel& model, std::uint64_t seed, double margin = 0.05);

/// End-effector targets along a smooth joint-space path: each joint follows
/// start + amplitude * a_j * sin(2 pi f_j t + phi_j), clamped to its limits,
/// with seeded a_j in [0.5, 1], f_j in [0.1, 0.3] Hz and phase chosen so the
/// path starts at `start`. Returns the path alongside the targets.
struct ArmPath {
  std::vector<TimedPose> targets;
  std::vector<Eigen::VectorXd> q;
};
ArmPath synth_arm_path(const KinematicModel& arm, const std::string& ee_frame, const Eigen::VectorXd& start, int frames,
                       double rate_hz, std::uint64_t seed, double amplitude = 0.4);

struct PulseSpec {
  int sensors = kDefaultSensorCount;
  int fingers = 5;
  int frames = 300;
  double rate_hz = 100.0;
  double pulse_start = 1.0;  // seconds
  double pulse_end = 1.6;
  double amplitude = 400.0;  // ADC counts
  double noise = 1.0;        // standard deviation, ADC counts
  std::vector<int> pulse_sensors = {6, 7, 8};
  std::uint64_t seed = 1;
};

struct PulseFixture {
  std::vector<TactileFrame> frames;
  CalibrationTable table;
};

/// Tactile stream whose drift follows per-finger joint positions, plus a
/// contact pulse on selected sensors. The calibration table samples the
/// drift exactly on its grid.
PulseFixture synth_pulse(const PulseSpec& spec);

}  // namespace teleop
