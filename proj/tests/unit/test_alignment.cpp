#include <doctest.h>

#include <random>

#include "teleop/alignment.hpp"

using namespace teleop;

namespace {

Pose random_pose(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Pose(Eigen::Vector3d(n(rng), n(rng), n(rng)) * 0.3,
              Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized());
}

EngagePoses random_engage(std::mt19937& rng) {
  return {random_pose(rng), random_pose(rng), random_pose(rng), random_pose(rng)};
}

Pose at(double x, double y, double z) { return Pose(Eigen::Vector3d(x, y, z), Eigen::Quaterniond::Identity()); }

}  // namespace

TEST_CASE("every mode starts at the robot pose") {
  std::mt19937 rng(3);
  for (auto mode : {AlignmentMode::kSeparately, AlignmentMode::kCenter, AlignmentMode::kLeft, AlignmentMode::kRight}) {
    for (int i = 0; i < 20; ++i) {
      const EngagePoses e = random_engage(rng);
      const auto a = FrameAlignment::engage(mode, e);
      CHECK(poses_equal(a.map(Side::kLeft, *e.human_left), *e.robot_left, 1e-12, 1e-12));
      CHECK(poses_equal(a.map(Side::kRight, *e.human_right), *e.robot_right, 1e-12, 1e-12));
    }
  }
}

TEST_CASE("center mode worked example") {
  EngagePoses e{at(-0.2, 0, 0), at(0.2, 0, 0), at(-0.3, 0, 0.5), at(0.3, 0, 0.5)};
  const auto a = FrameAlignment::engage(AlignmentMode::kCenter, e);
  CHECK((a.anchor_offset() - Eigen::Vector3d(0, 0, 0.5)).norm() < 1e-15);
  const Pose right = a.map(Side::kRight, at(0.3, 0, 0));
  const Pose left = a.map(Side::kLeft, at(-0.2, 0, 0));
  CHECK((right.position() - Eigen::Vector3d(0.4, 0, 0.5)).norm() < 1e-12);
  const double change = (right.position() - left.position()).norm() - 0.6;
  CHECK(change == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("separate mode maps a pure wrist rotation") {
  std::mt19937 rng(8);
  const EngagePoses e = random_engage(rng);
  const auto a = FrameAlignment::engage(AlignmentMode::kSeparately, e);
  const Eigen::Quaterniond r(Eigen::AngleAxisd(0.4, Eigen::Vector3d(1, 2, 3).normalized()));
  const Pose human(e.human_right->position(), e.human_right->orientation() * r);
  const Pose target = a.map(Side::kRight, human);
  CHECK((target.position() - e.robot_right->position()).norm() < 1e-12);
  CHECK(rotation_angle(target.orientation(), e.robot_right->orientation() * r) < 1e-12);
}

TEST_CASE("modes need their hands") {
  EngagePoses e{at(0, 0, 0), std::nullopt, at(0, 0, 0), std::nullopt};
  CHECK_NOTHROW(FrameAlignment::engage(AlignmentMode::kLeft, e));
  CHECK_THROWS_AS(FrameAlignment::engage(AlignmentMode::kCenter, e), std::invalid_argument);
  CHECK_THROWS_AS(FrameAlignment::engage(AlignmentMode::kRight, e), std::invalid_argument);
}

TEST_CASE("mode names") {
  CHECK(parse_alignment_mode("ALIGN_CENTER") == AlignmentMode::kCenter);
  CHECK(std::string(alignment_mode_name(AlignmentMode::kLeft)) == "ALIGN_LEFT");
  CHECK_THROWS_AS(parse_alignment_mode("ALIGN_UP"), std::invalid_argument);
}
