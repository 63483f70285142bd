#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "teleop/model_io.hpp"
#include "teleop/synth.hpp"

using namespace teleop;

namespace {

const char* kMimicDoc = R"({
  "name": "mimic",
  "links": [{"name": "a"}, {"name": "b"}, {"name": "c"}],
  "joints": [
    {"name": "j1", "type": "revolute", "parent": "a", "child": "b", "axis": [0, 0, 1], "limits": [-1, 1]},
    {"name": "j2", "type": "revolute", "parent": "b", "child": "c", "axis": [0, 0, 1], "limits": [-1, 1],
     "origin": {"position": [1, 0, 0]}, "passive": {"source": "j1", "coefficients": [0, 1]}}
  ]
})";

std::string poly_doc(double upper_child) {
  return R"({
  "name": "poly",
  "links": [{"name": "a"}, {"name": "b"}, {"name": "c"}],
  "joints": [
    {"name": "j1", "type": "revolute", "parent": "a", "child": "b", "axis": [0, 0, 1], "limits": [0, 1]},
    {"name": "j2", "type": "revolute", "parent": "b", "child": "c", "axis": [0, 0, 1], "limits": [0, )" +
         std::to_string(upper_child) + R"(],
     "passive": {"source": "j1", "coefficients": [0, 0.5, 0.1]}}
  ]
})";
}

}  // namespace

TEST_CASE("planar arm loads with two active joints") {
  const auto m = load_model_file(oracle::model_path("planar2.json"));
  CHECK(m.dof() == 2);
  CHECK(m.active_count() == 2);
}

TEST_CASE("identity mimic joint") {
  const auto m = load_model(kMimicDoc);
  CHECK(m.dof() == 2);
  CHECK(m.active_count() == 1);
  const Eigen::VectorXd full = full_config(m, Eigen::VectorXd::Constant(1, 0.3));
  CHECK(full[0] == doctest::Approx(0.3));
  CHECK(full[1] == doctest::Approx(0.3));
}

TEST_CASE("polynomial passive map") {
  const auto m = load_model(poly_doc(1.0));
  const Eigen::VectorXd full = full_config(m, Eigen::VectorXd::Constant(1, 1.0));
  CHECK(full[1] == doctest::Approx(0.6));
  // at q1 = 1 the map gives 0.6, above this limit
  CHECK_THROWS_AS(load_model(poly_doc(0.5)), ModelError);
}

TEST_CASE("model without passive joints passes through") {
  const auto m = load_model_file(oracle::model_path("arm7.json"));
  const Eigen::VectorXd q = random_configuration(m, 3);
  CHECK((full_config(m, q) - q).norm() == 0.0);
}

TEST_CASE("malformed documents are rejected") {
  CHECK_THROWS_AS(load_model("{"), ModelError);
  CHECK_THROWS_AS(load_model(R"({"name": "x", "links": [{"name": "a"}], "joints": [
    {"name": "j", "type": "revolute", "parent": "a", "child": "zz", "axis": [0,0,1], "limits": [0,1]}]})"),
                  ModelError);
  CHECK_THROWS_AS(load_model(R"({"name": "x", "links": [{"name": "a"}, {"name": "b"}], "joints": [
    {"name": "j", "type": "revolute", "parent": "a", "child": "b", "axis": [0,0,1], "limits": [1,0]}]})"),
                  ModelError);
}

TEST_CASE("planar forward kinematics") {
  const auto m = load_model_file(oracle::model_path("planar2.json"));
  Pose p = forward_kinematics(m, Eigen::Vector2d(0, 0), "tip");
  CHECK((p.position() - Eigen::Vector3d(2, 0, 0)).norm() < 1e-12);
  CHECK(rotation_angle(p.orientation(), Eigen::Quaterniond::Identity()) < 1e-12);
  p = forward_kinematics(m, Eigen::Vector2d(M_PI / 2, 0), "tip");
  CHECK((p.position() - Eigen::Vector3d(0, 2, 0)).norm() < 1e-12);
  CHECK_THROWS_AS(forward_kinematics(m, Eigen::Vector2d(0, 0), "missing"), ModelError);
}

TEST_CASE("forward kinematics matches the matrix-chain oracle") {
  for (const char* file : {"arm7.json", "four_bar_hand.json", "dual_arm7.json"}) {
    const auto m = load_model_file(oracle::model_path(file));
    const auto robot = oracle::load(file);
    for (int s = 0; s < 20; ++s) {
      const Eigen::VectorXd q = random_configuration(m, 100 + s, 0.0);
      const auto world = oracle::fk(robot, oracle::named(m, q));
      for (const auto& link : m.links()) {
        const Pose p = forward_kinematics(m, q, link.name);
        CHECK((p.position() - oracle::position(world.at(link.name))).norm() < 1e-10);
        CHECK((p.rotation() - world.at(link.name).block<3, 3>(0, 0)).norm() < 1e-10);
      }
    }
  }
}

TEST_CASE("jacobian columns match finite differences of the oracle") {
  const auto m = load_model_file(oracle::model_path("four_bar_hand.json"));
  const auto robot = oracle::load("four_bar_hand.json");
  for (int s = 0; s < 10; ++s) {
    const Eigen::VectorXd q = random_configuration(m, 7 + s);
    const JacobianResult jr = spatial_jacobian(m, q, "index_tip");
    for (int i = 0; i < m.active_count(); ++i) {
      Eigen::VectorXd a = q, b = q;
      a[i] += 1e-6;
      b[i] -= 1e-6;
      const Eigen::Vector3d dp = (oracle::position(oracle::fk(robot, oracle::named(m, a)).at("index_tip")) -
                                  oracle::position(oracle::fk(robot, oracle::named(m, b)).at("index_tip"))) /
                                 2e-6;
      CHECK((jr.jacobian.col(i).head<3>() - dp).norm() < 1e-7);
    }
  }
}

TEST_CASE("planar manipulability") {
  const auto m = load_model_file(oracle::model_path("planar2.json"));
  JacobianResult jr = spatial_jacobian(m, Eigen::Vector2d(0, M_PI / 2), "tip", kPlanarRows);
  CHECK(jr.manipulability == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(manipulability_index(jr.jacobian, kPlanarRows) == doctest::Approx(1.0).epsilon(1e-12));
  jr = spatial_jacobian(m, Eigen::Vector2d(0, 0), "tip", kPlanarRows);
  CHECK(jr.manipulability == doctest::Approx(0.0));
  CHECK(jr.smallest_singular_value < 1e-12);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int s = 0; s < 20; ++s) {
    const Eigen::Vector2d q(u(rng), u(rng));
    jr = spatial_jacobian(m, q, "tip", kPlanarRows);
    CHECK(jr.manipulability == doctest::Approx(std::abs(std::sin(q[1]))).epsilon(1e-10));
    CHECK(manipulability_index(jr.jacobian, kPlanarRows) == doctest::Approx(jr.manipulability).epsilon(1e-9));
  }
}

TEST_CASE("limits check") {
  const auto m = load_model_file(oracle::model_path("planar2.json"));
  CHECK(within_limits(m, Eigen::Vector2d(0, 0)));
  CHECK_FALSE(within_limits(m, Eigen::Vector2d(100, 0)));
}
