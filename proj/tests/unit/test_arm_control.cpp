#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "teleop/arm_control.hpp"
#include "teleop/model_io.hpp"
#include "teleop/synth.hpp"

using namespace teleop;

namespace {

ArmControlProblem arm(const std::string& file, const std::string& ee, bool collision, bool singularity) {
  ArmControlProblem p;
  p.model = std::make_shared<const KinematicModel>(load_model_file(oracle::model_path(file)));
  p.spheres = std::make_shared<const SphereModel>(build_sphere_model(*p.model));
  p.ee_frame = ee;
  p.enable_collision = collision;
  p.enable_singularity = singularity;
  return p;
}

ArmControlProblem planar(bool singularity) {
  auto p = arm("planar2.json", "tip", false, singularity);
  p.rotation_weight = 0.0;
  p.task_rows = kPlanarRows;
  return p;
}

Pose planar_target(double x, double y) { return Pose(Eigen::Vector3d(x, y, 0), Eigen::Quaterniond::Identity()); }

}  // namespace

TEST_CASE("ik cost at the current pose") {
  const auto p = arm("arm7.json", "ee", false, false);
  const Eigen::VectorXd q = random_configuration(*p.model, 9);
  CHECK(ik_cost(p, q, forward_kinematics(*p.model, q, "ee")).value < 1e-3);
}

TEST_CASE("ik rotation term for a quarter turn") {
  const auto p = arm("arm7.json", "ee", false, false);
  const Eigen::VectorXd q = random_configuration(*p.model, 10);
  const Pose ee = forward_kinematics(*p.model, q, "ee");
  const Pose target(ee.position(), ee.orientation() * Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ())));
  CHECK(ik_cost(p, q, target).value == doctest::Approx(p.rotation_weight * M_PI / 2).epsilon(1e-9));
}

TEST_CASE("ik gradient matches finite differences") {
  const auto p = arm("arm7.json", "ee", false, false);
  for (int s = 0; s < 20; ++s) {
    const Eigen::VectorXd q = random_configuration(*p.model, 20 + s);
    const Pose target = forward_kinematics(*p.model, random_configuration(*p.model, 40 + s), "ee");
    const auto v = ik_cost(p, q, target);
    const Eigen::VectorXd fd =
        oracle::central_difference([&](const Eigen::VectorXd& x) { return ik_cost(p, x, target).value; }, q);
    CHECK(oracle::relative_error(v.gradient, fd) < 1e-5);
  }
}

TEST_CASE("singularity term is inactive away from singularities") {
  const auto p = planar(true);
  const auto v = singularity_cost(p, Eigen::Vector2d(0.2, 1.2));
  CHECK(v.value == 0.0);
  CHECK(v.gradient.norm() == 0.0);
}

TEST_CASE("singularity term near full extension") {
  const auto p = planar(true);
  const auto v = singularity_cost(p, Eigen::Vector2d(0.0, 1e-5));
  CHECK(v.value == doctest::Approx(1.0).epsilon(1e-4));
  // the gradient drives the elbow away from the straight configuration
  CHECK(v.gradient[1] < 0.0);
}

TEST_CASE("singularity gradient is consistent with its value") {
  const auto p = planar(true);
  for (double q2 : {0.01, 0.03, -0.02, 0.05}) {
    const Eigen::Vector2d q(0.3, q2);
    const auto v = singularity_cost(p, q);
    const Eigen::VectorXd fd =
        oracle::central_difference([&](const Eigen::VectorXd& x) { return singularity_cost(p, x).value; }, q, 1e-5);
    CHECK(oracle::relative_error(v.gradient, fd) < 1e-3);
  }
}

TEST_CASE("reachable targets are recovered") {
  auto p = arm("arm7.json", "ee", false, false);
  p.max_iterations = 100;
  const auto robot = oracle::load("arm7.json");
  int ok = 0;
  for (int s = 0; s < 20; ++s) {
    const Eigen::VectorXd truth = random_configuration(*p.model, 300 + s, 0.2);
    const Pose target = forward_kinematics(*p.model, truth, "ee");
    const Eigen::VectorXd start = truth + 0.2 * Eigen::VectorXd::Ones(truth.size()) * (s % 2 ? 1 : -1);
    const ArmCommand c = solve_arm(p, target, start);
    const Eigen::Matrix4d ee = oracle::fk(robot, oracle::named(*p.model, c.active_q)).at("ee");
    const bool pos = (oracle::position(ee) - target.position()).norm() < 1e-3;
    const Eigen::Quaterniond got(Eigen::Matrix3d(ee.block<3, 3>(0, 0)));
    const bool rot = rotation_angle(got, target.orientation()) < 0.01;
    ok += pos && rot;
  }
  CHECK(ok >= 19);
}

TEST_CASE("unreachable target stops at the workspace boundary") {
  auto p = planar(false);
  p.max_iterations = 200;
  const ArmCommand c = solve_arm(p, planar_target(3.0, 0.0), Eigen::Vector2d(0.3, 0.5));
  CHECK(c.ik_error_pos == doctest::Approx(1.0).epsilon(5e-3));
}

TEST_CASE("constant target converges to a fixed point") {
  const auto p = arm("arm7.json", "ee", true, true);
  const Eigen::VectorXd q0 = (Eigen::VectorXd(7) << 0, 0.3, 0, 1.2, 0, 0.9, 0).finished();
  const Pose target = forward_kinematics(*p.model, q0 + 0.1 * Eigen::VectorXd::Ones(7), "ee");
  ArmController ctl(p, q0);
  Eigen::VectorXd last = q0;
  double change = 1.0;
  for (int i = 0; i < 20; ++i) {
    ctl.step({0.01 * i, target});
    change = (ctl.current() - last).norm();
    last = ctl.current();
  }
  CHECK(change < 1e-6);
}

TEST_CASE("circular path has no joint jumps") {
  const auto p = planar(false);
  std::vector<TimedPose> path;
  for (int i = 0; i < 200; ++i) {
    const double t = i / 100.0;
    path.push_back({t, planar_target(1.2 + 0.3 * std::cos(2 * M_PI * 0.5 * t), 0.3 * std::sin(2 * M_PI * 0.5 * t))});
  }
  const auto cmds = track_trajectory(p, path, Eigen::Vector2d(-0.5, 1.6));
  double worst = 0.0;
  for (std::size_t i = 1; i < cmds.size(); ++i) {
    worst = std::max(worst, (cmds[i].active_q - cmds[i - 1].active_q).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 0.2);
  CHECK(cmds.back().ik_error_pos < 1e-3);
}
