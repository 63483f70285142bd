#include <doctest.h>

#include "oracles.hpp"
#include "teleop/model_io.hpp"
#include "teleop/synth.hpp"

using namespace teleop;

namespace {

std::string chain_doc(int links, int spheres_per_link, const std::string& ignore = "[]") {
  std::string doc = R"({"name": "chain", "collision_ignore_pairs": )" + ignore + R"(, "links": [)";
  for (int l = 0; l < links; ++l) {
    doc += (l ? "," : "") + std::string(R"({"name": "l)") + std::to_string(l) + R"(", "spheres": [)";
    for (int s = 0; s < spheres_per_link; ++s) {
      doc += (s ? "," : "") + std::string(R"({"center": [)") + std::to_string(0.1 * s) + R"(, 0, 0], "radius": 0.05})";
    }
    doc += "]}";
  }
  doc += R"(], "joints": [)";
  for (int l = 1; l < links; ++l) {
    doc += (l > 1 ? "," : "") + std::string(R"({"name": "j)") + std::to_string(l) + R"(", "type": "revolute", "parent": "l)" +
           std::to_string(l - 1) + R"(", "child": "l)" + std::to_string(l) +
           R"(", "axis": [0, 0, 1], "limits": [-3, 3], "origin": {"position": [1, 0, 0]}})";
  }
  return doc + "]}";
}

}  // namespace

TEST_CASE("adjacent links are excluded") {
  const auto m = load_model(chain_doc(2, 2));
  const auto s = build_sphere_model(m);
  CHECK(s.size() == 4);
  CHECK(s.active_pairs().empty());
}

TEST_CASE("three-link chain has one active pair") {
  const auto m = load_model(chain_doc(3, 1));
  const auto s = build_sphere_model(m);
  REQUIRE(s.active_pairs().size() == 1);
  CHECK(m.links()[s.spheres()[s.active_pairs()[0].first].link].name == "l0");
  CHECK(m.links()[s.spheres()[s.active_pairs()[0].second].link].name == "l2");
}

TEST_CASE("ignore pairs remove the remaining pairs") {
  const auto m = load_model(chain_doc(3, 1, R"([["l0", "l2"]])"));
  CHECK(build_sphere_model(m).active_pairs().empty());
}

TEST_CASE("pair distance and its floor") {
  CHECK(pair_distance({0, 0, 0}, 0.1, {0.5, 0, 0}, 0.1) == doctest::Approx(0.3));
  CHECK(pair_distance({0, 0, 0}, 0.2, {0.3, 0, 0}, 0.2) == doctest::Approx(1e-4));
  CHECK(surface_distance({0, 0, 0}, 0.2, {0.3, 0, 0}, 0.2) == doctest::Approx(-0.1));
}

TEST_CASE("collision cost with no active pairs") {
  const auto m = load_model(chain_doc(2, 2));
  const auto s = build_sphere_model(m);
  const auto v = collision_cost(s, m, Eigen::VectorXd::Zero(1));
  CHECK(v.value == doctest::Approx(1e6));
  CHECK(v.gradient.norm() == 0.0);
}

TEST_CASE("collision cost with one active pair") {
  const auto m = load_model(chain_doc(3, 1));
  const auto s = build_sphere_model(m);
  const Eigen::Vector2d q(0.4, -0.3);
  const double d = Eigen::Vector2d(1 + std::cos(q[0]), std::sin(q[0])).norm() - 0.1;
  CHECK(collision_cost(s, m, q).value == doctest::Approx(1.0 / (d + 1e-6)).epsilon(1e-12));
  CHECK(collision_value(s, compute_state(m, full_config(m, q))) == doctest::Approx(1.0 / (d + 1e-6)).epsilon(1e-12));
}

TEST_CASE("collision gradient matches finite differences") {
  const auto m = load_model_file(oracle::model_path("arm7.json"));
  const auto s = build_sphere_model(m);
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd q = random_configuration(m, 60 + k, 0.05);
    const auto v = collision_cost(s, m, q);
    const Eigen::VectorXd fd =
        oracle::central_difference([&](const Eigen::VectorXd& x) { return collision_cost(s, m, x).value; }, q);
    CHECK(oracle::relative_error(v.gradient, fd) < 1e-5);
  }
}

TEST_CASE("penetration set matches the all-pairs oracle") {
  const auto m = load_model_file(oracle::model_path("dual_arm7.json"));
  const auto robot = oracle::load("dual_arm7.json");
  const auto s = build_sphere_model(m);
  int nonempty = 0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd q = random_configuration(m, 1000 + k, 0.0);
    const auto expected = oracle::penetrating(robot, oracle::fk(robot, oracle::named(m, q)));
    const auto got = oracle::named_pairs(m, s, penetrating_pairs(s, m, q));
    CHECK(got == expected);
    nonempty += expected.empty() ? 0 : 1;
  }
  CHECK(nonempty > 0);
}
