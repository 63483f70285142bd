#pragma once

// Test-side reference implementations. These read the robot files with their
// own parser and use plain 4x4 homogeneous matrices, so they share no code
// with the library they check.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "teleop/collision.hpp"
#include "teleop/kinematics.hpp"

#ifndef TELEOP_MODELS_DIR
#define TELEOP_MODELS_DIR "models"
#endif

namespace oracle {

inline std::string model_path(const std::string& name) { return std::string(TELEOP_MODELS_DIR) + "/" + name; }

using Mat4 = Eigen::Matrix4d;

struct Joint {
  std::string name, type, parent, child;
  Mat4 origin = Mat4::Identity();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  bool passive = false;
  std::string source;
  std::vector<double> coefficients;
};

struct Link {
  std::string name;
  std::vector<std::pair<Eigen::Vector3d, double>> spheres;
};

struct Robot {
  std::vector<Link> links;
  std::vector<Joint> joints;
  std::vector<std::pair<std::string, std::string>> ignore;
};

inline Mat4 quat_matrix(double w, double x, double y, double z, const Eigen::Vector3d& p) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n, x /= n, y /= n, z /= n;
  Mat4 m = Mat4::Identity();
  m(0, 0) = 1 - 2 * (y * y + z * z);
  m(0, 1) = 2 * (x * y - w * z);
  m(0, 2) = 2 * (x * z + w * y);
  m(1, 0) = 2 * (x * y + w * z);
  m(1, 1) = 1 - 2 * (x * x + z * z);
  m(1, 2) = 2 * (y * z - w * x);
  m(2, 0) = 2 * (x * z - w * y);
  m(2, 1) = 2 * (y * z + w * x);
  m(2, 2) = 1 - 2 * (x * x + y * y);
  m.block<3, 1>(0, 3) = p;
  return m;
}

// Rodrigues rotation about a unit axis.
inline Mat4 rotation_about(const Eigen::Vector3d& k, double angle) {
  Eigen::Matrix3d K;
  K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  Mat4 m = Mat4::Identity();
  m.block<3, 3>(0, 0) = Eigen::Matrix3d::Identity() + std::sin(angle) * K + (1 - std::cos(angle)) * K * K;
  return m;
}

inline Robot load(const std::string& file) {
  std::ifstream in(model_path(file));
  if (!in) throw std::runtime_error("oracle: cannot open " + file);
  const nlohmann::json doc = nlohmann::json::parse(in);
  Robot r;
  for (const auto& l : doc["links"]) {
    Link link{l["name"].get<std::string>(), {}};
    if (l.contains("spheres")) {
      for (const auto& s : l["spheres"]) {
        link.spheres.push_back({Eigen::Vector3d(s["center"][0], s["center"][1], s["center"][2]), s["radius"].get<double>()});
      }
    }
    r.links.push_back(link);
  }
  for (const auto& j : doc["joints"]) {
    Joint joint;
    joint.name = j["name"];
    joint.type = j["type"];
    joint.parent = j["parent"];
    joint.child = j["child"];
    if (j.contains("origin")) {
      const auto& o = j["origin"];
      Eigen::Vector3d p = Eigen::Vector3d::Zero();
      if (o.contains("position")) p = Eigen::Vector3d(o["position"][0], o["position"][1], o["position"][2]);
      double w = 1, x = 0, y = 0, z = 0;
      if (o.contains("orientation")) w = o["orientation"][0], x = o["orientation"][1], y = o["orientation"][2],
                                     z = o["orientation"][3];
      joint.origin = quat_matrix(w, x, y, z, p);
    }
    if (j.contains("axis")) joint.axis = Eigen::Vector3d(j["axis"][0], j["axis"][1], j["axis"][2]).normalized();
    if (j.contains("passive")) {
      joint.passive = true;
      joint.source = j["passive"]["source"];
      joint.coefficients = j["passive"]["coefficients"].get<std::vector<double>>();
    }
    r.joints.push_back(joint);
  }
  if (doc.contains("collision_ignore_pairs")) {
    for (const auto& p : doc["collision_ignore_pairs"]) r.ignore.push_back({p[0], p[1]});
  }
  return r;
}

/// World transform of every link. `active` holds the driven joints by name;
/// passive joints follow their polynomials.
inline std::map<std::string, Mat4> fk(const Robot& r, const std::map<std::string, double>& active) {
  std::map<std::string, double> value = active;
  for (const auto& j : r.joints) {
    if (!j.passive) continue;
    const double x = active.at(j.source);
    double v = 0.0, p = 1.0;
    for (double c : j.coefficients) v += c * p, p *= x;
    value[j.name] = v;
  }
  std::set<std::string> children;
  for (const auto& j : r.joints) children.insert(j.child);
  std::map<std::string, Mat4> world;
  for (const auto& l : r.links) {
    if (!children.count(l.name)) world[l.name] = Mat4::Identity();
  }
  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto& j : r.joints) {
      if (world.count(j.child) || !world.count(j.parent)) continue;
      Mat4 motion = Mat4::Identity();
      if (j.type == "revolute") motion = rotation_about(j.axis, value.at(j.name));
      if (j.type == "prismatic") motion.block<3, 1>(0, 3) = j.axis * value.at(j.name);
      world[j.child] = world[j.parent] * j.origin * motion;
      progress = true;
    }
  }
  return world;
}

inline std::map<std::string, double> named(const teleop::KinematicModel& model, const Eigen::VectorXd& q) {
  std::map<std::string, double> out;
  for (int i = 0; i < model.active_count(); ++i) out[model.coordinate_joint(i).name] = q[i];
  return out;
}

inline Eigen::Vector3d position(const Mat4& m) { return m.block<3, 1>(0, 3); }

/// A sphere named by (link, index within the link).
using SphereId = std::pair<std::string, int>;
using PairSet = std::set<std::pair<SphereId, SphereId>>;

inline std::pair<SphereId, SphereId> ordered(SphereId a, SphereId b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

/// All-pairs penetration check with the exclusion rules written out directly.
inline PairSet penetrating(const Robot& r, const std::map<std::string, Mat4>& world) {
  auto related = [&](const std::string& a, const std::string& b) {
    if (a == b) return true;
    for (const auto& j : r.joints) {
      if ((j.parent == a && j.child == b) || (j.parent == b && j.child == a)) return true;
    }
    for (const auto& p : r.ignore) {
      if ((p.first == a && p.second == b) || (p.first == b && p.second == a)) return true;
    }
    return false;
  };
  struct S {
    SphereId id;
    Eigen::Vector3d c;
    double radius;
  };
  std::vector<S> all;
  for (const auto& l : r.links) {
    for (std::size_t i = 0; i < l.spheres.size(); ++i) {
      const Eigen::Vector4d local(l.spheres[i].first.x(), l.spheres[i].first.y(), l.spheres[i].first.z(), 1.0);
      all.push_back({{l.name, static_cast<int>(i)}, (world.at(l.name) * local).head<3>(), l.spheres[i].second});
    }
  }
  PairSet out;
  for (std::size_t a = 0; a < all.size(); ++a) {
    for (std::size_t b = 0; b < all.size(); ++b) {
      if (a == b || related(all[a].id.first, all[b].id.first)) continue;
      if ((all[a].c - all[b].c).norm() < all[a].radius + all[b].radius) out.insert(ordered(all[a].id, all[b].id));
    }
  }
  return out;
}

/// Library pair indices translated to (link, index) names.
inline PairSet named_pairs(const teleop::KinematicModel& model, const teleop::SphereModel& spheres,
                           const std::vector<std::pair<int, int>>& pairs) {
  std::vector<SphereId> ids;
  std::map<int, int> seen;
  for (const auto& s : spheres.spheres()) ids.push_back({model.links()[s.link].name, seen[s.link]++});
  PairSet out;
  for (const auto& [i, j] : pairs) out.insert(ordered(ids[i], ids[j]));
  return out;
}

/// Integer form of clip(floor((v - T) * 255 / (v_max - T)), 0, 255).
inline int pwm(std::int64_t v, std::int64_t t, std::int64_t v_max) {
  const std::int64_t num = (v - t) * 255;
  const std::int64_t den = v_max - t;
  std::int64_t q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;  // floor, not truncation
  return static_cast<int>(std::clamp<std::int64_t>(q, 0, 255));
}

/// Central-difference gradient of f at x.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& reference, double floor = 1e-8) {
  return (analytic - reference).norm() / std::max(reference.norm(), floor);
}

}  // namespace oracle
