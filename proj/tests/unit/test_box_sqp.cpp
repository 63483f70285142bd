#include <doctest.h>

#include <cmath>

#include "teleop/box_sqp.hpp"

using namespace teleop;

TEST_CASE("unconstrained quadratic converges to its minimum") {
  const Eigen::Vector2d c(0.3, -0.2);
  auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const Eigen::VectorXd d = x - c;
    if (g) *g = 2 * d;
    return d.squaredNorm();
  };
  const auto r = minimize_box(f, Eigen::Vector2d(1, 1), Eigen::Vector2d(-5, -5), Eigen::Vector2d(5, 5), {});
  CHECK(r.converged());
  CHECK((r.x - c).norm() < 1e-6);
}

TEST_CASE("bound constraints become active") {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = 2 * (x - Eigen::Vector2d(3, -3));
    return (x - Eigen::Vector2d(3, -3)).squaredNorm();
  };
  const auto r = minimize_box(f, Eigen::Vector2d(0, 0), Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1), {});
  CHECK(r.converged());
  CHECK(r.x[0] == doctest::Approx(1.0));
  CHECK(r.x[1] == doctest::Approx(-1.0));
}

TEST_CASE("rosenbrock inside a box") {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    if (g) {
      (*g)[0] = -2 * a - 400 * x[0] * b;
      (*g)[1] = 200 * b;
    }
    return a * a + 100 * b * b;
  };
  BoxSqpOptions o;
  o.max_iterations = 500;
  const auto r = minimize_box(f, Eigen::Vector2d(-1.2, 1), Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2), o);
  CHECK((r.x - Eigen::Vector2d(1, 1)).norm() < 1e-4);
}

TEST_CASE("start outside the box is projected") {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = 2 * x;
    return x.squaredNorm();
  };
  BoxSqpOptions o;
  o.max_iterations = 0;
  const auto r = minimize_box(f, Eigen::Vector2d(9, -9), Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1), o);
  CHECK(r.x[0] == 1.0);
  CHECK(r.x[1] == -1.0);
}

TEST_CASE("non-finite objective is reported") {
  auto f = [](const Eigen::VectorXd&, Eigen::VectorXd* g) {
    if (g) g->setZero();
    return std::nan("");
  };
  const auto r = minimize_box(f, Eigen::Vector2d(0, 0), Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1), {});
  CHECK(r.status == BoxSqpStatus::kNonFinite);
  CHECK_FALSE(r.converged());
}

TEST_CASE("accept gate keeps iterates in the accepted region") {
  // minimum at x = 0, but the gate rejects x < 0.5
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = 2 * x;
    return x.squaredNorm();
  };
  auto accept = [](const Eigen::VectorXd& x) { return x[0] >= 0.5; };
  const auto r = minimize_box(f, Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, -5),
                              Eigen::VectorXd::Constant(1, 5), {}, accept);
  CHECK(r.x[0] >= 0.5);
  CHECK(r.x[0] < 0.6);
}
