#include "teleop/model_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace teleop {
namespace {

using nlohmann::json;

void require_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ModelError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ModelError(where + ": unknown key '" + key + "'");
  }
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ModelError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ModelError(where + ": not finite");
  return d;
}

Eigen::Vector3d vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw ModelError(where + ": expected [x, y, z]");
  return {number(v[0], where), number(v[1], where), number(v[2], where)};
}

Pose parse_origin(const json& v, const std::string& where) {
  require_keys(v, {"position", "orientation"}, where);
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  if (v.contains("position")) p = vec3(v["position"], where + ".position");
  if (!v.contains("orientation")) return Pose(p, Eigen::Quaterniond::Identity());
  const json& q = v["orientation"];
  if (!q.is_array() || q.size() != 4) throw ModelError(where + ".orientation: expected [w, x, y, z]");
  try {
    return Pose::from_wxyz(p, number(q[0], where), number(q[1], where), number(q[2], where),
                           number(q[3], where));
  } catch (const std::invalid_argument& e) {
    throw ModelError(where + ": " + e.what());
  }
}

JointType parse_type(const json& v, const std::string& where) {
  if (!v.is_string()) throw ModelError(where + ": type must be a string");
  const auto s = v.get<std::string>();
  if (s == "revolute") return JointType::kRevolute;
  if (s == "prismatic") return JointType::kPrismatic;
  if (s == "fixed") return JointType::kFixed;
  throw ModelError(where + ": unknown joint type '" + s + "'");
}

std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) throw ModelError(where + ": expected a string");
  return v.get<std::string>();
}

}  // namespace

KinematicModel load_model(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("malformed robot description: ") + e.what());
  }
  require_keys(doc, {"name", "links", "joints", "collision_ignore_pairs"}, "robot");
  if (!doc.contains("links") || !doc["links"].is_array()) throw ModelError("robot: 'links' array required");
  if (!doc.contains("joints") || !doc["joints"].is_array()) throw ModelError("robot: 'joints' array required");

  std::vector<Link> links;
  std::unordered_map<std::string, int> link_ids;
  for (std::size_t i = 0; i < doc["links"].size(); ++i) {
    const json& l = doc["links"][i];
    const std::string where = "links[" + std::to_string(i) + "]";
    require_keys(l, {"name", "spheres"}, where);
    Link link;
    link.name = text(l.value("name", json()), where + ".name");
    if (l.contains("spheres")) {
      if (!l["spheres"].is_array()) throw ModelError(where + ".spheres: expected an array");
      for (std::size_t s = 0; s < l["spheres"].size(); ++s) {
        const json& sj = l["spheres"][s];
        const std::string sw = where + ".spheres[" + std::to_string(s) + "]";
        require_keys(sj, {"center", "radius"}, sw);
        if (!sj.contains("center") || !sj.contains("radius")) throw ModelError(sw + ": center and radius required");
        Sphere sphere{vec3(sj["center"], sw + ".center"), number(sj["radius"], sw + ".radius")};
        if (sphere.radius <= 0.0) throw ModelError(sw + ": radius must be positive");
        link.spheres.push_back(sphere);
      }
    }
    if (!link_ids.emplace(link.name, static_cast<int>(i)).second) {
      throw ModelError(where + ": duplicate link name '" + link.name + "'");
    }
    links.push_back(std::move(link));
  }

  auto resolve = [&](const std::string& name, const std::string& where) {
    auto it = link_ids.find(name);
    if (it == link_ids.end()) throw ModelError(where + ": unknown link '" + name + "'");
    return it->second;
  };

  std::vector<Joint> joints;
  std::set<std::string> joint_names;
  for (std::size_t i = 0; i < doc["joints"].size(); ++i) {
    const json& jj = doc["joints"][i];
    const std::string where = "joints[" + std::to_string(i) + "]";
    require_keys(jj, {"name", "type", "parent", "child", "origin", "axis", "limits", "passive"}, where);
    for (const char* key : {"name", "type", "parent", "child"}) {
      if (!jj.contains(key)) throw ModelError(where + ": '" + key + "' required");
    }
    Joint j;
    j.name = text(jj["name"], where + ".name");
    if (!joint_names.insert(j.name).second) throw ModelError(where + ": duplicate joint name '" + j.name + "'");
    j.type = parse_type(jj["type"], where + ".type");
    j.parent_link = resolve(text(jj["parent"], where + ".parent"), where + ".parent");
    j.child_link = resolve(text(jj["child"], where + ".child"), where + ".child");
    if (jj.contains("origin")) j.origin = parse_origin(jj["origin"], where + ".origin");
    if (j.type != JointType::kFixed) {
      if (!jj.contains("axis") || !jj.contains("limits")) {
        throw ModelError(where + ": movable joints need 'axis' and 'limits'");
      }
      const Eigen::Vector3d axis = vec3(jj["axis"], where + ".axis");
      if (axis.norm() < 1e-9) throw ModelError(where + ".axis: zero vector");
      j.axis = axis.normalized();
      const json& lim = jj["limits"];
      if (!lim.is_array() || lim.size() != 2) throw ModelError(where + ".limits: expected [lower, upper]");
      j.lower = number(lim[0], where + ".limits");
      j.upper = number(lim[1], where + ".limits");
      if (jj.contains("passive")) {
        const json& pj = jj["passive"];
        require_keys(pj, {"source", "coefficients"}, where + ".passive");
        if (!pj.contains("source") || !pj.contains("coefficients")) {
          throw ModelError(where + ".passive: source and coefficients required");
        }
        PassiveMap map;
        map.source_joint = text(pj["source"], where + ".passive.source");
        if (!pj["coefficients"].is_array()) throw ModelError(where + ".passive.coefficients: expected an array");
        for (const json& c : pj["coefficients"]) map.coefficients.push_back(number(c, where + ".passive.coefficients"));
        j.passive = std::move(map);
      }
    } else if (jj.contains("passive") || jj.contains("limits")) {
      throw ModelError(where + ": fixed joints take no limits or passive map");
    }
    joints.push_back(std::move(j));
  }

  std::vector<std::pair<std::string, std::string>> ignore;
  if (doc.contains("collision_ignore_pairs")) {
    const json& pairs = doc["collision_ignore_pairs"];
    if (!pairs.is_array()) throw ModelError("collision_ignore_pairs: expected an array");
    for (const json& p : pairs) {
      if (!p.is_array() || p.size() != 2) throw ModelError("collision_ignore_pairs: expected [link, link] entries");
      ignore.emplace_back(text(p[0], "collision_ignore_pairs"), text(p[1], "collision_ignore_pairs"));
    }
  }

  std::string name = doc.contains("name") ? text(doc["name"], "name") : std::string("robot");
  return KinematicModel(std::move(name), std::move(links), std::move(joints), std::move(ignore));
}

KinematicModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open robot description '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

}  // namespace teleop
