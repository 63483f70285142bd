#pragma once

// Timing harnesses behind `teleop profile` and the acceptance suite.

#include <string>
#include <vector>

#include "teleop/arm_control.hpp"
#include "teleop/haptics.hpp"
#include "teleop/profiler.hpp"
#include "teleop/retargeting.hpp"

namespace teleop {

/// Reduced vs constraint-based retargeting over the same frames. Both solve
/// each frame from the same warm start (the reduced solution of the previous
/// frame). Rows "retargeting (reduced)" / "retargeting (constrained)"; values
/// "speedup" and "max_objective_gap" when both run.
ProfileReport profile_retargeting(const RetargetProblem& problem,
                                  const std::vector<std::vector<Eigen::Vector3d>>& human,
                                  const Eigen::VectorXd& initial_q, bool reduced = true, bool constrained = true);

enum class MotionVariant { kIk, kColl, kSing, kCollSing };

const char* motion_variant_name(MotionVariant v);  // "IK", "+Coll", "+Sing", "+Coll+Sing"
/// Comma-separated list of ik, coll, sing, coll+sing, or "all".
std::vector<MotionVariant> parse_motion_variants(const std::string& text);

/// Tracks the targets once per variant from the same start. Rows
/// "motion_control (<variant>)".
ProfileReport profile_motion_control(const ArmControlProblem& base, const std::vector<TimedPose>& targets,
                                     const Eigen::VectorXd& initial_q, const std::vector<MotionVariant>& variants);

/// Per-frame pipeline time. Row "haptics (PWM)".
ProfileReport profile_haptics(const CalibrationTable& table, const HapticsConfig& config,
                              const std::vector<TactileFrame>& frames);

}  // namespace teleop
