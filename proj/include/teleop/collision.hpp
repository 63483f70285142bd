#pragma once

// Self-collision cost over a sphere decomposition of the robot links:
//   L_col = 1 / (sum over unmasked pairs of dist(e_i, e_j) + eps)
// where dist is the surface distance floored at kDistanceFloor.

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "teleop/box_sqp.hpp"
#include "teleop/kinematics.hpp"

namespace teleop {

inline constexpr double kDistanceFloor = 1e-4;     // meters
inline constexpr double kCollisionEpsilon = 1e-6;

struct SphereRef {
  int link = 0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // link frame
  double radius = 0.0;
};

class SphereModel {
 public:
  SphereModel() = default;
  SphereModel(std::vector<SphereRef> spheres, std::vector<std::vector<bool>> mask);

  const std::vector<SphereRef>& spheres() const { return spheres_; }
  std::size_t size() const { return spheres_.size(); }
  bool checked(std::size_t i, std::size_t j) const { return mask_[i][j]; }
  /// Unmasked pairs with i < j.
  const std::vector<std::pair<int, int>>& active_pairs() const { return pairs_; }

 private:
  std::vector<SphereRef> spheres_;
  std::vector<std::vector<bool>> mask_;
  std::vector<std::pair<int, int>> pairs_;
};

/// Flattens the per-link spheres and masks same-link, parent/child and
/// user-ignored link pairs. A model without spheres yields an empty sphere
/// model (constant collision cost) and a warning on stderr.
SphereModel build_sphere_model(const KinematicModel& model);

/// World-frame sphere centers for a kinematic state.
std::vector<Eigen::Vector3d> world_centers(const SphereModel& spheres, const KinematicState& state);

/// |c_i - c_j| - r_i - r_j, negative when penetrating.
double surface_distance(const Eigen::Vector3d& ci, double ri, const Eigen::Vector3d& cj, double rj);

/// Surface distance floored at kDistanceFloor.
double pair_distance(const Eigen::Vector3d& ci, double ri, const Eigen::Vector3d& cj, double rj);

ObjectiveValue collision_cost(const SphereModel& spheres, const KinematicModel& model,
                              const Eigen::VectorXd& active_q, double epsilon = kCollisionEpsilon);

/// Same cost from a precomputed state and passive chain matrix (n x k).
ObjectiveValue collision_cost(const SphereModel& spheres, const KinematicModel& model, const KinematicState& state,
                              const Eigen::MatrixXd& chain, double epsilon = kCollisionEpsilon);

/// Cost value only, without the gradient.
double collision_value(const SphereModel& spheres, const KinematicState& state, double epsilon = kCollisionEpsilon);

/// Unmasked pairs (i < j) whose surface distance is negative.
std::vector<std::pair<int, int>> penetrating_pairs(const SphereModel& spheres, const KinematicModel& model,
                                                   const Eigen::VectorXd& active_q);
std::vector<std::pair<int, int>> penetrating_pairs(const SphereModel& spheres, const KinematicState& state);

}  // namespace teleop
