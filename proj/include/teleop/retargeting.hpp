#pragma once

// Fingertip-vector hand retargeting over the active joints of a hand model.
// Passive (loop) joints are evaluated from their maps in the forward pass and
// their gradient contributions are folded into the driving active joints.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "teleop/box_sqp.hpp"
#include "teleop/kinematics.hpp"

namespace teleop {

enum class Side { kLeft, kRight };

const char* side_name(Side side);

struct HandFrame {
  double timestamp = 0.0;
  Side side = Side::kRight;
  Pose wrist;
  std::vector<Eigen::Vector3d> keypoints;  // wrist frame, meters
  std::vector<std::string> labels;

  /// Keypoint by label; nullopt when absent.
  std::optional<Eigen::Vector3d> keypoint(const std::string& label) const;
  bool finite() const;
};

/// One compared vector: robot (tip_frame - origin_frame) against human
/// (tip_label - origin_label). An empty origin_label means the wrist origin.
struct KeypointVector {
  std::string origin_frame;
  std::string tip_frame;
  std::string tip_label;
  std::string origin_label;
};

struct RetargetProblem {
  std::shared_ptr<const KinematicModel> model;
  double scaling = 1.0;              // alpha
  double smoothness_weight = 0.03;   // beta
  std::vector<KeypointVector> vectors;
  int max_iterations = 50;
  double convergence_tol = 1e-6;

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

struct RetargetResult {
  Eigen::VectorXd active_q;
  double objective_value = 0.0;
  int iterations_used = 0;
  bool converged = false;
  bool skipped = false;  // frame had non-finite keypoints; active_q = prev_q
  double solve_time = 0.0;  // seconds
};

/// Sum over vectors of |alpha v_i - FK_i(q)|^2 plus beta |q - prev_q|^2, with
/// the analytic reduced gradient.
ObjectiveValue hand_objective(const RetargetProblem& problem, const Eigen::VectorXd& active_q,
                              const Eigen::VectorXd& prev_q, const std::vector<Eigen::Vector3d>& human_vectors);

/// Same objective over all n coordinates with passive joints free; smoothness
/// applies to the active block. Equal to hand_objective on the constraint manifold.
ObjectiveValue expanded_hand_objective(const RetargetProblem& problem, const Eigen::VectorXd& full_q,
                                       const Eigen::VectorXd& prev_q,
                                       const std::vector<Eigen::Vector3d>& human_vectors);

/// Robot-side vectors FK_i(q) for the problem's vector set.
std::vector<Eigen::Vector3d> robot_vectors(const RetargetProblem& problem, const Eigen::VectorXd& active_q);

/// Human-side vectors from a frame. Throws std::invalid_argument on a missing label.
std::vector<Eigen::Vector3d> human_vectors(const RetargetProblem& problem, const HandFrame& frame);

/// Reduced-dimension solve over the k active joints, warm-started at prev_q.
RetargetResult retarget(const RetargetProblem& problem, const HandFrame& frame, const Eigen::VectorXd& prev_q);
RetargetResult retarget_vectors(const RetargetProblem& problem, const std::vector<Eigen::Vector3d>& human,
                                const Eigen::VectorXd& prev_q);

struct ConstrainedOptions {
  double feasibility_tol = 1e-10;
  int max_outer_iterations = 30;
  double initial_penalty = 10.0;
};

/// Reference formulation: all n coordinates are variables and each passive map
/// is an equality constraint, handled by an augmented Lagrangian around the
/// same bounded solver. Slower; kept as the comparison baseline.
RetargetResult retarget_constrained(const RetargetProblem& problem, const std::vector<Eigen::Vector3d>& human,
                                    const Eigen::VectorXd& prev_q, const ConstrainedOptions& options = {});

/// alpha = robot_hand_length / human_hand_length.
double scale_estimate(double human_hand_length, double robot_hand_length);

/// Stateful per-hand solver: keeps the previous solution as warm start and
/// smoothness baseline. The first solved frame has no predecessor, so it is
/// solved with beta = 0 starting from initial_q.
class HandRetargeter {
 public:
  HandRetargeter(RetargetProblem problem, Eigen::VectorXd initial_q);

  RetargetResult step(const HandFrame& frame);
  /// Same, with human vectors already extracted.
  RetargetResult step(const std::vector<Eigen::Vector3d>& human);
  /// Records a skipped frame: the command holds the current configuration.
  RetargetResult hold() const;
  const Eigen::VectorXd& current() const { return current_; }
  const RetargetProblem& problem() const { return problem_; }

 private:
  RetargetResult advance(RetargetResult r);

  RetargetProblem problem_;
  Eigen::VectorXd current_;
  bool primed_ = false;
};

}  // namespace teleop
