#include "teleop/retargeting.hpp"

#include <chrono>
#include <cmath>

namespace teleop {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct ResolvedVector {
  int origin;
  int tip;
};

std::vector<ResolvedVector> resolve(const RetargetProblem& problem) {
  std::vector<ResolvedVector> out;
  out.reserve(problem.vectors.size());
  for (const auto& v : problem.vectors) {
    out.push_back({problem.model->link_index(v.origin_frame), problem.model->link_index(v.tip_frame)});
  }
  return out;
}

// Mismatch term and its gradient with respect to all n coordinates.
double mismatch_full(const RetargetProblem& problem, const std::vector<ResolvedVector>& links,
                     const KinematicState& state, const std::vector<Eigen::Vector3d>& human,
                     Eigen::VectorXd* grad_full) {
  const KinematicModel& model = *problem.model;
  double value = 0.0;
  if (grad_full) grad_full->setZero(model.dof());
  for (std::size_t i = 0; i < links.size(); ++i) {
    const Eigen::Vector3d p_tip = state.links[links[i].tip].translation();
    const Eigen::Vector3d p_origin = state.links[links[i].origin].translation();
    const Eigen::Vector3d residual = problem.scaling * human[i] - (p_tip - p_origin);
    value += residual.squaredNorm();
    if (grad_full) {
      const Eigen::Matrix3Xd j = point_position_jacobian_full(model, state, links[i].tip, p_tip) -
                                 point_position_jacobian_full(model, state, links[i].origin, p_origin);
      *grad_full -= 2.0 * j.transpose() * residual;
    }
  }
  return value;
}

void check_sizes(const RetargetProblem& problem, const std::vector<Eigen::Vector3d>& human) {
  if (human.size() != problem.vectors.size()) {
    throw std::invalid_argument("human vector count does not match the problem's vector set");
  }
}

double reduced_objective(const RetargetProblem& problem, const std::vector<ResolvedVector>& links,
                         const Eigen::VectorXd& active_q, const Eigen::VectorXd& prev_q,
                         const std::vector<Eigen::Vector3d>& human, Eigen::VectorXd* grad) {
  const KinematicModel& model = *problem.model;
  const KinematicState state = compute_state(model, full_config(model, active_q));
  Eigen::VectorXd grad_full;
  double value = mismatch_full(problem, links, state, human, grad ? &grad_full : nullptr);
  const Eigen::VectorXd delta = active_q - prev_q;
  value += problem.smoothness_weight * delta.squaredNorm();
  if (grad) {
    // Passive contributions fold into their source: grad_i += sum_j dc_j/dq_i * dL/dq_j.
    *grad = passive_chain_matrix(model, active_q).transpose() * grad_full;
    *grad += 2.0 * problem.smoothness_weight * delta;
  }
  return value;
}

double expanded_objective(const RetargetProblem& problem, const std::vector<ResolvedVector>& links,
                          const Eigen::VectorXd& full_q, const Eigen::VectorXd& prev_q,
                          const std::vector<Eigen::Vector3d>& human, Eigen::VectorXd* grad) {
  const KinematicModel& model = *problem.model;
  const int k = model.active_count();
  const KinematicState state = compute_state(model, full_q);
  double value = mismatch_full(problem, links, state, human, grad);
  const Eigen::VectorXd delta = full_q.head(k) - prev_q;
  value += problem.smoothness_weight * delta.squaredNorm();
  if (grad) grad->head(k) += 2.0 * problem.smoothness_weight * delta;
  return value;
}

}  // namespace

const char* side_name(Side side) { return side == Side::kLeft ? "left" : "right"; }

std::optional<Eigen::Vector3d> HandFrame::keypoint(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size() && i < keypoints.size(); ++i) {
    if (labels[i] == label) return keypoints[i];
  }
  return std::nullopt;
}

bool HandFrame::finite() const {
  for (const auto& k : keypoints) {
    if (!k.allFinite()) return false;
  }
  return std::isfinite(timestamp);
}

void RetargetProblem::validate() const {
  if (!model) throw std::invalid_argument("retarget problem has no model");
  if (vectors.empty()) throw std::invalid_argument("retarget problem needs at least one keypoint vector");
  if (!(scaling > 0.0)) throw std::invalid_argument("scaling must be positive");
  if (!(smoothness_weight >= 0.0)) throw std::invalid_argument("smoothness weight must be nonnegative");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  if (!(convergence_tol > 0.0)) throw std::invalid_argument("convergence_tol must be positive");
  for (const auto& v : vectors) {
    if (!model->find_link(v.origin_frame) || !model->find_link(v.tip_frame)) {
      throw std::invalid_argument("keypoint vector references unknown frame '" +
                                  (model->find_link(v.origin_frame) ? v.tip_frame : v.origin_frame) + "'");
    }
  }
}

ObjectiveValue hand_objective(const RetargetProblem& problem, const Eigen::VectorXd& active_q,
                              const Eigen::VectorXd& prev_q, const std::vector<Eigen::Vector3d>& human) {
  check_sizes(problem, human);
  ObjectiveValue out;
  out.value = reduced_objective(problem, resolve(problem), active_q, prev_q, human, &out.gradient);
  return out;
}

ObjectiveValue expanded_hand_objective(const RetargetProblem& problem, const Eigen::VectorXd& full_q,
                                       const Eigen::VectorXd& prev_q, const std::vector<Eigen::Vector3d>& human) {
  check_sizes(problem, human);
  ObjectiveValue out;
  out.value = expanded_objective(problem, resolve(problem), full_q, prev_q, human, &out.gradient);
  return out;
}

std::vector<Eigen::Vector3d> robot_vectors(const RetargetProblem& problem, const Eigen::VectorXd& active_q) {
  const KinematicState state = compute_state(*problem.model, full_config(*problem.model, active_q));
  std::vector<Eigen::Vector3d> out;
  for (const auto& v : resolve(problem)) {
    out.push_back(state.links[v.tip].translation() - state.links[v.origin].translation());
  }
  return out;
}

std::vector<Eigen::Vector3d> human_vectors(const RetargetProblem& problem, const HandFrame& frame) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(problem.vectors.size());
  for (const auto& v : problem.vectors) {
    const auto tip = frame.keypoint(v.tip_label);
    if (!tip) throw std::invalid_argument("frame lacks keypoint '" + v.tip_label + "'");
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    if (!v.origin_label.empty()) {
      const auto o = frame.keypoint(v.origin_label);
      if (!o) throw std::invalid_argument("frame lacks keypoint '" + v.origin_label + "'");
      origin = *o;
    }
    out.push_back(*tip - origin);
  }
  return out;
}

RetargetResult retarget_vectors(const RetargetProblem& problem, const std::vector<Eigen::Vector3d>& human,
                                const Eigen::VectorXd& prev_q) {
  const auto t0 = Clock::now();
  const KinematicModel& model = *problem.model;
  RetargetResult result;
  for (const auto& v : human) {
    if (!v.allFinite()) {
      result.active_q = prev_q;
      result.skipped = true;
      result.solve_time = seconds_since(t0);
      return result;
    }
  }
  check_sizes(problem, human);
  const auto links = resolve(problem);

  const ObjectiveFn objective = [&](const Eigen::VectorXd& q, Eigen::VectorXd* grad) {
    return reduced_objective(problem, links, q, prev_q, human, grad);
  };
  BoxSqpOptions options;
  options.max_iterations = problem.max_iterations;
  options.gradient_tol = problem.convergence_tol;
  const BoxSqpResult r = minimize_box(objective, prev_q, model.active_lower(), model.active_upper(), options);
  if (r.status == BoxSqpStatus::kNonFinite) {
    throw SolverError("retargeting objective is not finite; check the hand model and scaling");
  }
  result.active_q = r.x;
  result.objective_value = r.value;
  result.iterations_used = r.iterations;
  result.converged = r.converged();
  result.solve_time = seconds_since(t0);
  return result;
}

RetargetResult retarget(const RetargetProblem& problem, const HandFrame& frame, const Eigen::VectorXd& prev_q) {
  if (!frame.finite()) {
    RetargetResult skipped;
    skipped.active_q = prev_q;
    skipped.skipped = true;
    return skipped;
  }
  return retarget_vectors(problem, human_vectors(problem, frame), prev_q);
}

RetargetResult retarget_constrained(const RetargetProblem& problem, const std::vector<Eigen::Vector3d>& human,
                                    const Eigen::VectorXd& prev_q, const ConstrainedOptions& options) {
  const auto t0 = Clock::now();
  check_sizes(problem, human);
  const KinematicModel& model = *problem.model;
  const int k = model.active_count();
  const int n = model.dof();
  const int m = n - k;
  const auto links = resolve(problem);

  auto residual = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd h(m);
    for (int c = k; c < n; ++c) {
      const PassiveMap& map = *model.coordinate_joint(c).passive;
      h[c - k] = x[c] - map.value(x[map.source]);
    }
    return h;
  };

  Eigen::VectorXd x = full_config(model, prev_q.cwiseMax(model.active_lower()).cwiseMin(model.active_upper()));
  Eigen::VectorXd multipliers = Eigen::VectorXd::Zero(m);
  double penalty = options.initial_penalty;
  double last_violation = INFINITY;
  int iterations = 0;
  bool converged = false;

  for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
    const ObjectiveFn lagrangian = [&](const Eigen::VectorXd& z, Eigen::VectorXd* grad) {
      const Eigen::VectorXd h = residual(z);
      const double value = expanded_objective(problem, links, z, prev_q, human, grad) + multipliers.dot(h) +
                           0.5 * penalty * h.squaredNorm();
      if (grad) {
        // dh_j/dz: +1 on the passive coordinate, -c_j'(z_src) on its source.
        const Eigen::VectorXd w = multipliers + penalty * h;
        for (int c = k; c < n; ++c) {
          const PassiveMap& map = *model.coordinate_joint(c).passive;
          (*grad)[c] += w[c - k];
          (*grad)[map.source] -= w[c - k] * map.derivative(z[map.source]);
        }
      }
      return value;
    };
    BoxSqpOptions inner;
    inner.max_iterations = problem.max_iterations;
    inner.gradient_tol = problem.convergence_tol;
    const BoxSqpResult r = minimize_box(lagrangian, x, model.lower_limits(), model.upper_limits(), inner);
    if (r.status == BoxSqpStatus::kNonFinite) {
      throw SolverError("constrained retargeting objective is not finite");
    }
    x = r.x;
    iterations += r.iterations;
    const Eigen::VectorXd h = residual(x);
    const double violation = m == 0 ? 0.0 : h.cwiseAbs().maxCoeff();
    if (violation < options.feasibility_tol && r.converged()) {
      converged = true;
      break;
    }
    multipliers += penalty * h;
    if (violation > 0.25 * last_violation) penalty *= 10.0;
    last_violation = violation;
  }

  RetargetResult result;
  result.active_q = x.head(k);
  result.objective_value = hand_objective(problem, result.active_q, prev_q, human).value;
  result.iterations_used = iterations;
  result.converged = converged;
  result.solve_time = seconds_since(t0);
  return result;
}

double scale_estimate(double human_hand_length, double robot_hand_length) {
  if (!(human_hand_length > 0.0) || !(robot_hand_length > 0.0)) {
    throw std::invalid_argument("hand lengths must be positive");
  }
  return robot_hand_length / human_hand_length;
}

HandRetargeter::HandRetargeter(RetargetProblem problem, Eigen::VectorXd initial_q)
    : problem_(std::move(problem)), current_(std::move(initial_q)) {
  problem_.validate();
  if (current_.size() != problem_.model->active_count()) {
    throw std::invalid_argument("initial hand configuration has wrong size");
  }
}

RetargetResult HandRetargeter::advance(RetargetResult r) {
  if (!r.skipped) primed_ = true;
  current_ = r.active_q;
  return r;
}

RetargetResult HandRetargeter::step(const HandFrame& frame) {
  if (primed_) return advance(retarget(problem_, frame, current_));
  RetargetProblem first = problem_;
  first.smoothness_weight = 0.0;
  return advance(retarget(first, frame, current_));
}

RetargetResult HandRetargeter::step(const std::vector<Eigen::Vector3d>& human) {
  if (primed_) return advance(retarget_vectors(problem_, human, current_));
  RetargetProblem first = problem_;
  first.smoothness_weight = 0.0;
  return advance(retarget_vectors(first, human, current_));
}

RetargetResult HandRetargeter::hold() const {
  RetargetResult r;
  r.active_q = current_;
  r.skipped = true;
  return r;
}

}  // namespace teleop
