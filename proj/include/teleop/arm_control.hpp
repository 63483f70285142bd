#pragma once

// Per-frame arm joint solve: L_arm = L_ik + L_sin + L_col, box-bounded by the
// joint limits and warm-started from the previous command.

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "teleop/box_sqp.hpp"
#include "teleop/collision.hpp"
#include "teleop/kinematics.hpp"

namespace teleop {

/// Inner-product argument of arccos is clamped to [-1 + kArccosClamp, 1 - kArccosClamp].
inline constexpr double kArccosClamp = 1e-7;
/// Central-difference step for the manipulability gradient.
inline constexpr double kSingularityFdStep = 1e-6;

struct ArmControlProblem {
  std::shared_ptr<const KinematicModel> model;
  std::string ee_frame;
  std::shared_ptr<const SphereModel> spheres;  // required when enable_collision
  double position_weight = 1.0;         // beta_pos, 1/m
  double rotation_weight = 0.1;         // beta_rot, 1/rad
  double singularity_trigger = 0.05;    // s_low
  double singularity_temperature = 1.0; // lambda
  double collision_epsilon = kCollisionEpsilon;
  bool enable_collision = true;
  bool enable_singularity = true;
  int max_iterations = 30;
  double convergence_tol = 1e-6;
  /// Twist rows used for s_0 and the manipulability index.
  TaskRows task_rows = kAllRows;

  void validate() const;
};

struct ArmCommand {
  double timestamp = 0.0;
  Eigen::VectorXd active_q;
  double ik_error_pos = 0.0;        // meters
  double ik_error_rot = 0.0;        // radians
  double min_singular_value = 0.0;  // s_0 at the solution
  double objective_value = 0.0;
  int iterations = 0;
  double solve_time = 0.0;          // seconds
  bool converged = false;
  bool failed = false;              // non-finite cost; active_q holds the warm start
};

struct TimedPose {
  double timestamp = 0.0;
  Pose pose;
};

/// beta_pos |p_ee - p_target| + beta_rot arccos(2 <q_ee, q_target>^2 - 1).
ObjectiveValue ik_cost(const ArmControlProblem& problem, const Eigen::VectorXd& active_q, const Pose& target);

/// 1 - manipulability / lambda when s_0 < s_low, else 0. The active-branch
/// gradient is a central difference of the manipulability index.
ObjectiveValue singularity_cost(const ArmControlProblem& problem, const Eigen::VectorXd& active_q);

/// Sum of the enabled terms.
ObjectiveValue arm_objective(const ArmControlProblem& problem, const Eigen::VectorXd& active_q, const Pose& target);

ArmCommand solve_arm(const ArmControlProblem& problem, const Pose& target, const Eigen::VectorXd& prev_q);

/// Sequential solves, each warm-started at the previous command.
std::vector<ArmCommand> track_trajectory(const ArmControlProblem& problem, const std::vector<TimedPose>& targets,
                                         const Eigen::VectorXd& initial_q);

/// Stateful per-arm solver.
class ArmController {
 public:
  ArmController(ArmControlProblem problem, Eigen::VectorXd initial_q);

  ArmCommand step(const TimedPose& target);
  const Eigen::VectorXd& current() const { return current_; }
  const ArmControlProblem& problem() const { return problem_; }
  Pose end_effector() const;

 private:
  ArmControlProblem problem_;
  Eigen::VectorXd current_;
};

}  // namespace teleop
