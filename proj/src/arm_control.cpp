#include "teleop/arm_control.hpp"

#include <chrono>
#include <cmath>

namespace teleop {
namespace {

using Clock = std::chrono::steady_clock;

// dq/dt for a world-frame angular velocity w is 0.5 * (0, w) * q.
Eigen::Vector4d quaternion_rate(const Eigen::Vector3d& w, const Eigen::Quaterniond& q) {
  const Eigen::Vector3d v = q.vec();
  const Eigen::Vector3d vec = q.w() * w + w.cross(v);
  return 0.5 * Eigen::Vector4d(-w.dot(v), vec.x(), vec.y(), vec.z());  // (w, x, y, z)
}

Eigen::Vector4d wxyz(const Eigen::Quaterniond& q) { return {q.w(), q.x(), q.y(), q.z()}; }

// Everything the terms share for one configuration.
struct Evaluation {
  KinematicState state;
  Eigen::MatrixXd chain;  // n x k
  int ee = 0;
};

Evaluation evaluate(const ArmControlProblem& problem, const Eigen::VectorXd& active_q) {
  const KinematicModel& model = *problem.model;
  return {compute_state(model, full_config(model, active_q)), passive_chain_matrix(model, active_q),
          model.link_index(problem.ee_frame)};
}

Jacobian ee_jacobian(const ArmControlProblem& problem, const Evaluation& ev) {
  return point_jacobian_full(*problem.model, ev.state, ev.ee, ev.state.links[ev.ee].translation()) * ev.chain;
}

double ik_value(const ArmControlProblem& problem, const Evaluation& ev, const Pose& target) {
  const Eigen::Isometry3d& ee = ev.state.links[ev.ee];
  const double c = wxyz(Eigen::Quaterniond(ee.linear())).dot(wxyz(target.orientation()));
  const double u = std::clamp(2.0 * c * c - 1.0, -1.0 + kArccosClamp, 1.0 - kArccosClamp);
  return problem.position_weight * (ee.translation() - target.position()).norm() +
         problem.rotation_weight * std::acos(u);
}

ObjectiveValue ik_term(const ArmControlProblem& problem, const Evaluation& ev, const Jacobian& j, const Pose& target) {
  const KinematicModel& model = *problem.model;
  const Eigen::Isometry3d& ee = ev.state.links[ev.ee];
  const Eigen::Vector3d p = ee.translation();
  const Eigen::Quaterniond q(ee.linear());

  ObjectiveValue out;
  out.gradient = Eigen::VectorXd::Zero(model.active_count());

  const Eigen::Vector3d diff = p - target.position();
  const double dist = diff.norm();
  out.value = problem.position_weight * dist;
  if (dist > 0.0) out.gradient += problem.position_weight * j.topRows<3>().transpose() * (diff / dist);

  const Eigen::Vector4d qt = wxyz(target.orientation());
  const double c = wxyz(q).dot(qt);
  const double u_raw = 2.0 * c * c - 1.0;
  const double u = std::clamp(u_raw, -1.0 + kArccosClamp, 1.0 - kArccosClamp);
  out.value += problem.rotation_weight * std::acos(u);
  if (u == u_raw) {
    const double scale = -problem.rotation_weight / std::sqrt(1.0 - u * u) * 4.0 * c;
    for (int i = 0; i < model.active_count(); ++i) {
      const Eigen::Vector3d w = j.block<3, 1>(3, i);
      out.gradient[i] += scale * quaternion_rate(w, q).dot(qt);
    }
  }
  return out;
}

double manipulability_at(const ArmControlProblem& problem, const Eigen::VectorXd& active_q) {
  return manipulability_index(ee_jacobian(problem, evaluate(problem, active_q)), problem.task_rows);
}

// value/gradient of the singularity term; gradient skipped when grad is null.
double singularity_term(const ArmControlProblem& problem, const Jacobian& j, const Eigen::VectorXd& active_q,
                        Eigen::VectorXd* grad) {
  const int k = problem.model->active_count();
  const JacobianResult jr = analyze_jacobian(j, problem.task_rows);
  if (grad) grad->setZero(k);
  if (!(jr.smallest_singular_value < problem.singularity_trigger)) return 0.0;
  if (grad) {
    Eigen::VectorXd probe = active_q;
    for (int i = 0; i < k; ++i) {
      probe[i] = active_q[i] + kSingularityFdStep;
      const double plus = manipulability_at(problem, probe);
      probe[i] = active_q[i] - kSingularityFdStep;
      const double minus = manipulability_at(problem, probe);
      probe[i] = active_q[i];
      (*grad)[i] = -(plus - minus) / (2.0 * kSingularityFdStep * problem.singularity_temperature);
    }
  }
  return 1.0 - jr.manipulability / problem.singularity_temperature;
}

double total(const ArmControlProblem& problem, const Eigen::VectorXd& active_q, const Pose& target,
             Eigen::VectorXd* grad) {
  const Evaluation ev = evaluate(problem, active_q);
  if (!grad) {
    double value = ik_value(problem, ev, target);
    if (problem.enable_singularity) value += singularity_term(problem, ee_jacobian(problem, ev), active_q, nullptr);
    if (problem.enable_collision) value += collision_value(*problem.spheres, ev.state, problem.collision_epsilon);
    return value;
  }
  const Jacobian j = ee_jacobian(problem, ev);
  ObjectiveValue out = ik_term(problem, ev, j, target);
  if (problem.enable_singularity) {
    Eigen::VectorXd g;
    out.value += singularity_term(problem, j, active_q, &g);
    out.gradient += g;
  }
  if (problem.enable_collision) {
    const ObjectiveValue c = collision_cost(*problem.spheres, *problem.model, ev.state, ev.chain,
                                            problem.collision_epsilon);
    out.value += c.value;
    out.gradient += c.gradient;
  }
  *grad = std::move(out.gradient);
  return out.value;
}

}  // namespace

void ArmControlProblem::validate() const {
  if (!model) throw std::invalid_argument("arm problem has no model");
  if (!model->find_link(ee_frame)) throw std::invalid_argument("unknown end-effector frame '" + ee_frame + "'");
  if (!(position_weight > 0.0)) throw std::invalid_argument("position weight must be positive");
  if (!(rotation_weight >= 0.0)) throw std::invalid_argument("rotation weight must be nonnegative");
  if (!(singularity_temperature > 0.0)) throw std::invalid_argument("singularity temperature must be positive");
  if (!(singularity_trigger >= 0.0)) throw std::invalid_argument("singularity trigger must be nonnegative");
  if (!(collision_epsilon > 0.0)) throw std::invalid_argument("collision epsilon must be positive");
  if (enable_collision && !spheres) throw std::invalid_argument("collision enabled without a sphere model");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  if (!(convergence_tol > 0.0)) throw std::invalid_argument("convergence_tol must be positive");
}

ObjectiveValue ik_cost(const ArmControlProblem& problem, const Eigen::VectorXd& active_q, const Pose& target) {
  const Evaluation ev = evaluate(problem, active_q);
  return ik_term(problem, ev, ee_jacobian(problem, ev), target);
}

ObjectiveValue singularity_cost(const ArmControlProblem& problem, const Eigen::VectorXd& active_q) {
  ObjectiveValue out;
  out.value = singularity_term(problem, ee_jacobian(problem, evaluate(problem, active_q)), active_q, &out.gradient);
  return out;
}

ObjectiveValue arm_objective(const ArmControlProblem& problem, const Eigen::VectorXd& active_q, const Pose& target) {
  ObjectiveValue out;
  out.value = total(problem, active_q, target, &out.gradient);
  return out;
}

ArmCommand solve_arm(const ArmControlProblem& problem, const Pose& target, const Eigen::VectorXd& prev_q) {
  const auto t0 = Clock::now();
  const KinematicModel& model = *problem.model;
  if (!target.position().allFinite()) throw std::invalid_argument("arm target must be finite");

  const ObjectiveFn objective = [&](const Eigen::VectorXd& q, Eigen::VectorXd* grad) {
    return total(problem, q, target, grad);
  };
  AcceptFn accept;
  if (problem.enable_collision) {
    // Iterates never enter penetration when the warm start is clear.
    accept = [&](const Eigen::VectorXd& q) {
      return penetrating_pairs(*problem.spheres, model, q).empty();
    };
  }
  BoxSqpOptions options;
  options.max_iterations = problem.max_iterations;
  options.gradient_tol = problem.convergence_tol;
  const BoxSqpResult r =
      minimize_box(objective, prev_q, model.active_lower(), model.active_upper(), options, accept);

  ArmCommand cmd;
  cmd.iterations = r.iterations;
  if (r.status == BoxSqpStatus::kNonFinite) {
    cmd.active_q = r.x;
    cmd.failed = true;
    cmd.solve_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return cmd;
  }
  cmd.active_q = r.x;
  cmd.objective_value = r.value;
  cmd.converged = r.converged();
  const Evaluation ev = evaluate(problem, r.x);
  const Eigen::Isometry3d& ee = ev.state.links[ev.ee];
  cmd.ik_error_pos = (ee.translation() - target.position()).norm();
  cmd.ik_error_rot = rotation_angle(Eigen::Quaterniond(ee.linear()), target.orientation());
  const Jacobian j = point_jacobian_full(model, ev.state, ev.ee, ee.translation()) * ev.chain;
  cmd.min_singular_value = analyze_jacobian(j, problem.task_rows).smallest_singular_value;
  cmd.solve_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return cmd;
}

std::vector<ArmCommand> track_trajectory(const ArmControlProblem& problem, const std::vector<TimedPose>& targets,
                                         const Eigen::VectorXd& initial_q) {
  ArmController controller(problem, initial_q);
  std::vector<ArmCommand> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(controller.step(t));
  return out;
}

ArmController::ArmController(ArmControlProblem problem, Eigen::VectorXd initial_q)
    : problem_(std::move(problem)), current_(std::move(initial_q)) {
  problem_.validate();
  if (current_.size() != problem_.model->active_count()) {
    throw std::invalid_argument("initial arm configuration has wrong size");
  }
}

ArmCommand ArmController::step(const TimedPose& target) {
  ArmCommand cmd;
  try {
    cmd = solve_arm(problem_, target.pose, current_);
  } catch (const std::invalid_argument&) {
    cmd.active_q = current_;
    cmd.failed = true;
  }
  cmd.timestamp = target.timestamp;
  if (!cmd.failed) current_ = cmd.active_q;
  return cmd;
}

Pose ArmController::end_effector() const {
  return forward_kinematics(*problem_.model, current_, problem_.ee_frame);
}

}  // namespace teleop
