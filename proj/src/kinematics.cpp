#include "teleop/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace teleop {

double PassiveMap::value(double q_source) const {
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * q_source + *it;
  return acc;
}

double PassiveMap::derivative(double q_source) const {
  double acc = 0.0;
  for (std::size_t d = coefficients.size(); d-- > 1;) acc = acc * q_source + d * coefficients[d];
  return acc;
}

namespace {

// Extremes of a cubic over [lo, hi]: endpoints plus interior critical points.
std::pair<double, double> polynomial_range(const PassiveMap& map, double lo, double hi) {
  std::vector<double> xs = {lo, hi};
  std::vector<double> c = map.coefficients;
  c.resize(4, 0.0);
  // derivative: c1 + 2 c2 x + 3 c3 x^2
  const double a = 3.0 * c[3];
  const double b = 2.0 * c[2];
  const double cc = c[1];
  if (std::abs(a) > 1e-15) {
    const double disc = b * b - 4.0 * a * cc;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      xs.push_back((-b + s) / (2.0 * a));
      xs.push_back((-b - s) / (2.0 * a));
    }
  } else if (std::abs(b) > 1e-15) {
    xs.push_back(-cc / b);
  }
  double mn = INFINITY;
  double mx = -INFINITY;
  for (double x : xs) {
    if (x < lo || x > hi) continue;
    const double v = map.value(x);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  return {mn, mx};
}

}  // namespace

KinematicModel::KinematicModel(std::string name, std::vector<Link> links, std::vector<Joint> joints,
                               std::vector<std::pair<std::string, std::string>> ignore_pairs)
    : name_(std::move(name)), links_(std::move(links)), joints_(std::move(joints)) {
  for (int i = 0; i < static_cast<int>(links_.size()); ++i) {
    if (!link_lookup_.emplace(links_[i].name, i).second) {
      throw ModelError("duplicate link name '" + links_[i].name + "'");
    }
  }
  for (const auto& [a, b] : ignore_pairs) {
    ignore_pairs_.emplace_back(link_index(a), link_index(b));
  }
  validate_and_index();
}

int KinematicModel::link_index(const std::string& name) const {
  auto found = find_link(name);
  if (!found) throw ModelError("unknown link '" + name + "'");
  return *found;
}

std::optional<int> KinematicModel::find_link(const std::string& name) const {
  auto it = link_lookup_.find(name);
  if (it == link_lookup_.end()) return std::nullopt;
  return it->second;
}

int KinematicModel::coordinate_index(const std::string& joint_name) const {
  for (const auto& j : joints_) {
    if (j.name == joint_name) {
      if (j.coordinate < 0) throw ModelError("joint '" + joint_name + "' is fixed");
      return j.coordinate;
    }
  }
  throw ModelError("unknown joint '" + joint_name + "'");
}

bool KinematicModel::is_parent_of(int parent, int child) const {
  const int pj = links_[child].parent_joint;
  return pj >= 0 && joints_[pj].parent_link == parent;
}

void KinematicModel::validate_and_index() {
  if (links_.empty()) throw ModelError("model has no links");

  // Active first, then passive, then fixed; stable within each class.
  auto rank = [](const Joint& j) {
    if (j.type == JointType::kFixed) return 2;
    return j.passive ? 1 : 0;
  };
  std::stable_sort(joints_.begin(), joints_.end(),
                   [&](const Joint& a, const Joint& b) { return rank(a) < rank(b); });

  int coord = 0;
  for (int ji = 0; ji < static_cast<int>(joints_.size()); ++ji) {
    Joint& j = joints_[ji];
    if (j.type == JointType::kFixed) {
      if (j.passive) throw ModelError("fixed joint '" + j.name + "' cannot be passive");
      j.coordinate = -1;
      continue;
    }
    j.coordinate = coord++;
    coordinate_joint_.push_back(ji);
    if (!j.passive) ++active_count_;
  }

  for (auto& l : links_) l.parent_joint = -1;
  for (int ji = 0; ji < static_cast<int>(joints_.size()); ++ji) {
    const Joint& j = joints_[ji];
    if (j.parent_link < 0 || j.child_link < 0) throw ModelError("joint '" + j.name + "' has unresolved links");
    if (j.parent_link == j.child_link) throw ModelError("joint '" + j.name + "' connects a link to itself");
    Link& child = links_[j.child_link];
    if (child.parent_joint >= 0) {
      throw ModelError("link '" + child.name + "' has more than one parent joint");
    }
    child.parent_joint = ji;
  }

  std::vector<int> roots;
  for (int i = 0; i < static_cast<int>(links_.size()); ++i) {
    if (links_[i].parent_joint < 0) roots.push_back(i);
  }
  if (roots.size() != 1) {
    throw ModelError(roots.empty() ? "link graph has a cycle (no root link)"
                                   : "link graph has more than one root link");
  }
  root_ = roots.front();

  // Depth-first from the root; any link not reached sits on a cycle.
  std::vector<std::vector<int>> children(links_.size());
  for (int ji = 0; ji < static_cast<int>(joints_.size()); ++ji) {
    children[joints_[ji].parent_link].push_back(ji);
  }
  chains_.assign(links_.size(), {});
  std::vector<bool> seen(links_.size(), false);
  std::vector<int> stack = {root_};
  seen[root_] = true;
  while (!stack.empty()) {
    const int link = stack.back();
    stack.pop_back();
    // Reverse push keeps document order in the traversal.
    for (auto it = children[link].rbegin(); it != children[link].rend(); ++it) {
      const Joint& j = joints_[*it];
      if (seen[j.child_link]) throw ModelError("link graph has a cycle at '" + links_[j.child_link].name + "'");
      seen[j.child_link] = true;
      chains_[j.child_link] = chains_[link];
      if (j.coordinate >= 0) chains_[j.child_link].push_back(j.coordinate);
      stack.push_back(j.child_link);
    }
  }
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (!seen[i]) throw ModelError("link graph has a cycle involving '" + links_[i].name + "'");
  }
  // Parent-before-child order for FK.
  traversal_.clear();
  std::vector<int> frontier = {root_};
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int link : frontier) {
      for (int ji : children[link]) {
        traversal_.push_back(ji);
        next.push_back(joints_[ji].child_link);
      }
    }
    frontier = std::move(next);
  }

  const int n = dof();
  lower_.resize(n);
  upper_.resize(n);
  for (int c = 0; c < n; ++c) {
    const Joint& j = coordinate_joint(c);
    if (!(j.lower <= j.upper)) throw ModelError("joint '" + j.name + "' has lower limit above upper limit");
    lower_[c] = j.lower;
    upper_[c] = j.upper;
  }
  for (int c = active_count_; c < n; ++c) {
    Joint& j = joints_[coordinate_joint_[c]];
    PassiveMap& map = *j.passive;
    auto src = std::find_if(joints_.begin(), joints_.end(),
                            [&](const Joint& o) { return o.name == map.source_joint; });
    if (src == joints_.end()) {
      throw ModelError("passive joint '" + j.name + "' references unknown joint '" + map.source_joint + "'");
    }
    if (src->type == JointType::kFixed || src->passive) {
      throw ModelError("passive joint '" + j.name + "' must be driven by an active joint, not '" +
                       map.source_joint + "'");
    }
    map.source = src->coordinate;
    if (map.coefficients.empty() || map.coefficients.size() > 4) {
      throw ModelError("passive joint '" + j.name + "' needs 1 to 4 polynomial coefficients");
    }
    const auto [mn, mx] = polynomial_range(map, lower_[map.source], upper_[map.source]);
    constexpr double kTol = 1e-12;
    if (mn < j.lower - kTol || mx > j.upper + kTol) {
      throw ModelError("passive map of joint '" + j.name + "' leaves its limits [" +
                       std::to_string(j.lower) + ", " + std::to_string(j.upper) + "] (range " +
                       std::to_string(mn) + " .. " + std::to_string(mx) + ")");
    }
  }
}

Eigen::VectorXd full_config(const KinematicModel& model, const Eigen::VectorXd& active_q) {
  const int k = model.active_count();
  const int n = model.dof();
  if (active_q.size() != k) throw std::invalid_argument("active_q has wrong size");
  Eigen::VectorXd q(n);
  q.head(k) = active_q;
  for (int c = k; c < n; ++c) {
    const PassiveMap& map = *model.coordinate_joint(c).passive;
    q[c] = map.value(active_q[map.source]);
  }
  return q;
}

Eigen::MatrixXd passive_chain_matrix(const KinematicModel& model, const Eigen::VectorXd& active_q) {
  const int k = model.active_count();
  const int n = model.dof();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, k);
  d.topRows(k).setIdentity();
  for (int c = k; c < n; ++c) {
    const PassiveMap& map = *model.coordinate_joint(c).passive;
    d(c, map.source) = map.derivative(active_q[map.source]);
  }
  return d;
}

KinematicState compute_state(const KinematicModel& model, const Eigen::VectorXd& full_q) {
  const int n = model.dof();
  if (full_q.size() != n) throw std::invalid_argument("full_q has wrong size");
  KinematicState s;
  s.q = full_q;
  s.links.assign(model.links().size(), Eigen::Isometry3d::Identity());
  s.axes.assign(n, Eigen::Vector3d::Zero());
  s.origins.assign(n, Eigen::Vector3d::Zero());
  for (int ji : model.traversal()) {
    const Joint& j = model.joints()[ji];
    const Eigen::Isometry3d frame = s.links[j.parent_link] * j.origin.to_isometry();
    Eigen::Isometry3d motion = Eigen::Isometry3d::Identity();
    if (j.type == JointType::kRevolute) {
      motion.linear() = Eigen::AngleAxisd(full_q[j.coordinate], j.axis).toRotationMatrix();
    } else if (j.type == JointType::kPrismatic) {
      motion.translation() = j.axis * full_q[j.coordinate];
    }
    if (j.coordinate >= 0) {
      s.axes[j.coordinate] = frame.linear() * j.axis;
      s.origins[j.coordinate] = frame.translation();
    }
    s.links[j.child_link] = frame * motion;
  }
  return s;
}

Pose forward_kinematics(const KinematicModel& model, const Eigen::VectorXd& active_q,
                        const std::string& frame) {
  const int link = model.link_index(frame);
  const KinematicState s = compute_state(model, full_config(model, active_q));
  return Pose::from_isometry(s.links[link]);
}

Jacobian point_jacobian_full(const KinematicModel& model, const KinematicState& state, int link,
                             const Eigen::Vector3d& point_world) {
  Jacobian j = Jacobian::Zero(6, model.dof());
  for (int c : model.chain_coordinates(link)) {
    const Eigen::Vector3d& axis = state.axes[c];
    if (model.coordinate_joint(c).type == JointType::kRevolute) {
      j.block<3, 1>(0, c) = axis.cross(point_world - state.origins[c]);
      j.block<3, 1>(3, c) = axis;
    } else {
      j.block<3, 1>(0, c) = axis;
    }
  }
  return j;
}

Eigen::Matrix3Xd point_position_jacobian_full(const KinematicModel& model,
                                              const KinematicState& state, int link,
                                              const Eigen::Vector3d& point_world) {
  Eigen::Matrix3Xd j = Eigen::Matrix3Xd::Zero(3, model.dof());
  for (int c : model.chain_coordinates(link)) {
    const Eigen::Vector3d& axis = state.axes[c];
    if (model.coordinate_joint(c).type == JointType::kRevolute) {
      j.col(c) = axis.cross(point_world - state.origins[c]);
    } else {
      j.col(c) = axis;
    }
  }
  return j;
}

JacobianResult analyze_jacobian(Jacobian jacobian, const TaskRows& rows) {
  JacobianResult r;
  int count = 0;
  for (bool b : rows) count += b ? 1 : 0;
  Eigen::MatrixXd block(count, jacobian.cols());
  int at = 0;
  for (int i = 0; i < 6; ++i) {
    if (rows[i]) block.row(at++) = jacobian.row(i);
  }
  r.jacobian = std::move(jacobian);
  if (block.cols() == 0 || block.rows() == 0) return r;
  // Thin SVD: min(rows, cols) singular values. When rows <= cols their product
  // is sqrt(det(J J^T)); otherwise J J^T is singular by construction and the
  // product is sqrt(det(J^T J)), the volume spanned by the joint columns.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(block);
  const Eigen::VectorXd& sv = svd.singularValues();
  r.smallest_singular_value = sv.minCoeff();
  r.manipulability = sv.prod();
  return r;
}

double manipulability_index(const Jacobian& jacobian, const TaskRows& rows) {
  int count = 0;
  for (bool b : rows) count += b ? 1 : 0;
  Eigen::MatrixXd block(count, jacobian.cols());
  int at = 0;
  for (int i = 0; i < 6; ++i) {
    if (rows[i]) block.row(at++) = jacobian.row(i);
  }
  if (block.cols() == 0 || block.rows() == 0) return 0.0;
  const Eigen::MatrixXd gram =
      block.rows() <= block.cols() ? Eigen::MatrixXd(block * block.transpose()) : Eigen::MatrixXd(block.transpose() * block);
  const double det = gram.determinant();
  return det > 0.0 ? std::sqrt(det) : 0.0;
}

JacobianResult spatial_jacobian(const KinematicModel& model, const Eigen::VectorXd& active_q,
                                const std::string& frame, const TaskRows& rows) {
  const int link = model.link_index(frame);
  const Eigen::VectorXd q = full_config(model, active_q);
  const KinematicState s = compute_state(model, q);
  const Jacobian full = point_jacobian_full(model, s, link, s.links[link].translation());
  return analyze_jacobian(full * passive_chain_matrix(model, active_q), rows);
}

bool within_limits(const KinematicModel& model, const Eigen::VectorXd& active_q, double tol) {
  if (active_q.size() != model.active_count()) return false;
  if (!active_q.allFinite()) return false;
  const Eigen::VectorXd q = full_config(model, active_q);
  return ((q - model.lower_limits()).array() >= -tol).all() &&
         ((model.upper_limits() - q).array() >= -tol).all();
}

}  // namespace teleop
