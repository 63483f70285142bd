#pragma once

// Kinematic tree with active/passive joint partition, forward kinematics and
// spatial Jacobians.
//
// Joint vectors follow one ordering everywhere: the k active joints first,
// then the n - k passive joints, each class in description-document order.
// Fixed joints carry no coordinate.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "teleop/pose.hpp"

namespace teleop {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class JointType { kRevolute, kPrismatic, kFixed };

/// Cubic (or lower) polynomial driving a passive joint from one active joint:
/// q_passive = sum_d coefficients[d] * q_source^d.
struct PassiveMap {
  std::string source_joint;          // name of the driving joint
  int source = 0;                    // its active coordinate index in [0, k), set at load
  std::vector<double> coefficients;  // at most 4 entries

  double value(double q_source) const;
  double derivative(double q_source) const;
};

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // link frame
  double radius = 0.0;
};

struct Link {
  std::string name;
  int parent_joint = -1;  // -1 for the root
  std::vector<Sphere> spheres;
};

struct Joint {
  std::string name;
  JointType type = JointType::kFixed;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  Pose origin;  // parent link frame -> joint frame at q = 0
  int parent_link = -1;
  int child_link = -1;
  int coordinate = -1;  // index into the joint vector, -1 for fixed joints
  double lower = 0.0;
  double upper = 0.0;
  std::optional<PassiveMap> passive;
};

/// Immutable robot model. Build through load_model / load_model_file.
class KinematicModel {
 public:
  KinematicModel(std::string name, std::vector<Link> links, std::vector<Joint> joints,
                 std::vector<std::pair<std::string, std::string>> ignore_pairs);

  const std::string& name() const { return name_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<Joint>& joints() const { return joints_; }
  const std::vector<std::pair<int, int>>& collision_ignore_pairs() const { return ignore_pairs_; }

  int active_count() const { return active_count_; }
  int dof() const { return static_cast<int>(coordinate_joint_.size()); }
  const Eigen::VectorXd& lower_limits() const { return lower_; }
  const Eigen::VectorXd& upper_limits() const { return upper_; }
  Eigen::VectorXd active_lower() const { return lower_.head(active_count_); }
  Eigen::VectorXd active_upper() const { return upper_.head(active_count_); }

  int root_link() const { return root_; }
  int link_index(const std::string& name) const;  // throws ModelError
  std::optional<int> find_link(const std::string& name) const;
  int coordinate_index(const std::string& joint_name) const;  // throws ModelError

  /// Joint that owns coordinate i.
  const Joint& coordinate_joint(int i) const { return joints_[coordinate_joint_[i]]; }
  /// Joints in parent-before-child order.
  const std::vector<int>& traversal() const { return traversal_; }
  /// Coordinates whose motion moves the given link, root to tip.
  const std::vector<int>& chain_coordinates(int link) const { return chains_[link]; }
  /// True when the parent link of `child` is `parent`.
  bool is_parent_of(int parent, int child) const;

 private:
  void validate_and_index();

  std::string name_;
  std::vector<Link> links_;
  std::vector<Joint> joints_;
  std::vector<std::pair<int, int>> ignore_pairs_;
  std::unordered_map<std::string, int> link_lookup_;
  std::vector<int> coordinate_joint_;
  std::vector<int> traversal_;
  std::vector<std::vector<int>> chains_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  int active_count_ = 0;
  int root_ = 0;
};

/// World transforms of every link and every joint frame for one full configuration.
struct KinematicState {
  Eigen::VectorXd q;                        // full n-vector
  std::vector<Eigen::Isometry3d> links;     // by link index
  std::vector<Eigen::Vector3d> axes;        // by coordinate, world frame
  std::vector<Eigen::Vector3d> origins;     // by coordinate, world frame
};

using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Row selection applied to a 6-row twist Jacobian: [vx vy vz wx wy wz].
using TaskRows = std::array<bool, 6>;
inline constexpr TaskRows kAllRows = {true, true, true, true, true, true};
inline constexpr TaskRows kPositionRows = {true, true, true, false, false, false};
inline constexpr TaskRows kPlanarRows = {true, true, false, false, false, false};

struct JacobianResult {
  Jacobian jacobian;                   // 6 x k, [linear; angular], root frame
  double smallest_singular_value = 0;  // over the selected task rows
  double manipulability = 0;           // product of the selected block's singular values
};

Eigen::VectorXd full_config(const KinematicModel& model, const Eigen::VectorXd& active_q);

/// d(full_config)/d(active_q), an n x k matrix.
Eigen::MatrixXd passive_chain_matrix(const KinematicModel& model, const Eigen::VectorXd& active_q);

KinematicState compute_state(const KinematicModel& model, const Eigen::VectorXd& full_q);

Pose forward_kinematics(const KinematicModel& model, const Eigen::VectorXd& active_q,
                        const std::string& frame);

/// Jacobian (6 x n, all coordinates) of a point rigidly attached to `link`,
/// given in world coordinates.
Jacobian point_jacobian_full(const KinematicModel& model, const KinematicState& state, int link,
                             const Eigen::Vector3d& point_world);

/// Linear rows only: d(point)/d(full q), 3 x n.
Eigen::Matrix3Xd point_position_jacobian_full(const KinematicModel& model,
                                              const KinematicState& state, int link,
                                              const Eigen::Vector3d& point_world);

JacobianResult spatial_jacobian(const KinematicModel& model, const Eigen::VectorXd& active_q,
                                const std::string& frame, const TaskRows& rows = kAllRows);

/// Fills s_0 and the manipulability index from an already computed Jacobian.
JacobianResult analyze_jacobian(Jacobian jacobian, const TaskRows& rows);

/// Manipulability alone, from the Gram determinant of the selected rows
/// (cheaper than the SVD in analyze_jacobian; same value).
double manipulability_index(const Jacobian& jacobian, const TaskRows& rows);

bool within_limits(const KinematicModel& model, const Eigen::VectorXd& active_q, double tol = 0.0);

}  // namespace teleop
