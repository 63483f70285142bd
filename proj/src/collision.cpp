#include "teleop/collision.hpp"

#include <algorithm>
#include <iostream>

namespace teleop {

SphereModel::SphereModel(std::vector<SphereRef> spheres, std::vector<std::vector<bool>> mask)
    : spheres_(std::move(spheres)), mask_(std::move(mask)) {
  const std::size_t m = spheres_.size();
  if (mask_.size() != m) throw std::invalid_argument("pair mask size does not match sphere count");
  for (std::size_t i = 0; i < m; ++i) {
    if (mask_[i].size() != m) throw std::invalid_argument("pair mask must be square");
    if (mask_[i][i]) throw std::invalid_argument("pair mask diagonal must be false");
    if (!(spheres_[i].radius > 0.0)) throw std::invalid_argument("sphere radius must be positive");
    for (std::size_t j = i + 1; j < m; ++j) {
      if (mask_[i][j] != mask_[j][i]) throw std::invalid_argument("pair mask must be symmetric");
      if (mask_[i][j]) pairs_.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
}

SphereModel build_sphere_model(const KinematicModel& model) {
  std::vector<SphereRef> spheres;
  for (int l = 0; l < static_cast<int>(model.links().size()); ++l) {
    for (const Sphere& s : model.links()[l].spheres) spheres.push_back({l, s.center, s.radius});
  }
  if (spheres.empty()) {
    std::cerr << "warning: robot '" << model.name() << "' has no collision spheres; collision cost is constant\n";
  }
  const std::size_t m = spheres.size();
  std::vector<std::vector<bool>> mask(m, std::vector<bool>(m, false));
  auto ignored = [&](int a, int b) {
    for (const auto& [x, y] : model.collision_ignore_pairs()) {
      if ((x == a && y == b) || (x == b && y == a)) return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const int a = spheres[i].link;
      const int b = spheres[j].link;
      const bool check = a != b && !model.is_parent_of(a, b) && !model.is_parent_of(b, a) && !ignored(a, b);
      mask[i][j] = mask[j][i] = check;
    }
  }
  return SphereModel(std::move(spheres), std::move(mask));
}

std::vector<Eigen::Vector3d> world_centers(const SphereModel& spheres, const KinematicState& state) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(spheres.size());
  for (const SphereRef& s : spheres.spheres()) out.push_back(state.links[s.link] * s.center);
  return out;
}

double surface_distance(const Eigen::Vector3d& ci, double ri, const Eigen::Vector3d& cj, double rj) {
  return (ci - cj).norm() - ri - rj;
}

double pair_distance(const Eigen::Vector3d& ci, double ri, const Eigen::Vector3d& cj, double rj) {
  return std::max(surface_distance(ci, ri, cj, rj), kDistanceFloor);
}

ObjectiveValue collision_cost(const SphereModel& spheres, const KinematicModel& model, const KinematicState& state,
                              const Eigen::MatrixXd& chain, double epsilon) {
  const auto centers = world_centers(spheres, state);
  const auto& refs = spheres.spheres();
  double total = 0.0;
  // d(total)/d(center_i), accumulated per sphere, then mapped through each
  // sphere's point Jacobian once.
  std::vector<Eigen::Vector3d> pull(refs.size(), Eigen::Vector3d::Zero());
  for (const auto& [i, j] : spheres.active_pairs()) {
    const Eigen::Vector3d diff = centers[i] - centers[j];
    const double dist = diff.norm();
    const double surface = dist - refs[i].radius - refs[j].radius;
    if (surface > kDistanceFloor) {
      total += surface;
      const Eigen::Vector3d u = diff / dist;
      pull[i] += u;
      pull[j] -= u;
    } else {
      total += kDistanceFloor;
    }
  }
  ObjectiveValue out;
  const double denom = total + epsilon;
  out.value = 1.0 / denom;
  Eigen::VectorXd grad_full = Eigen::VectorXd::Zero(model.dof());
  for (std::size_t s = 0; s < refs.size(); ++s) {
    if (pull[s].isZero(0.0)) continue;
    grad_full += point_position_jacobian_full(model, state, refs[s].link, centers[s]).transpose() * pull[s];
  }
  out.gradient = -(chain.transpose() * grad_full) / (denom * denom);
  return out;
}

double collision_value(const SphereModel& spheres, const KinematicState& state, double epsilon) {
  const auto centers = world_centers(spheres, state);
  const auto& refs = spheres.spheres();
  double total = 0.0;
  for (const auto& [i, j] : spheres.active_pairs()) {
    total += pair_distance(centers[i], refs[i].radius, centers[j], refs[j].radius);
  }
  return 1.0 / (total + epsilon);
}

ObjectiveValue collision_cost(const SphereModel& spheres, const KinematicModel& model,
                              const Eigen::VectorXd& active_q, double epsilon) {
  const KinematicState state = compute_state(model, full_config(model, active_q));
  return collision_cost(spheres, model, state, passive_chain_matrix(model, active_q), epsilon);
}

std::vector<std::pair<int, int>> penetrating_pairs(const SphereModel& spheres, const KinematicState& state) {
  const auto centers = world_centers(spheres, state);
  const auto& refs = spheres.spheres();
  std::vector<std::pair<int, int>> out;
  for (const auto& [i, j] : spheres.active_pairs()) {
    if (surface_distance(centers[i], refs[i].radius, centers[j], refs[j].radius) < 0.0) out.emplace_back(i, j);
  }
  return out;
}

std::vector<std::pair<int, int>> penetrating_pairs(const SphereModel& spheres, const KinematicModel& model,
                                                   const Eigen::VectorXd& active_q) {
  return penetrating_pairs(spheres, compute_state(model, full_config(model, active_q)));
}

}  // namespace teleop
