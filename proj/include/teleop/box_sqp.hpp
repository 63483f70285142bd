#pragma once

#include <functional>
#include <stdexcept>

#include <Eigen/Core>

namespace teleop {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scalar cost with its gradient over the active joints.
struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Objective callback: returns f(x) and writes the gradient when `gradient` is non-null.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* gradient)>;

/// Optional acceptance test for trial points. Rejected points are treated like
/// an Armijo failure, so the iterate sequence stays inside the accepted set.
using AcceptFn = std::function<bool(const Eigen::VectorXd& x)>;

struct BoxSqpOptions {
  int max_iterations = 50;
  double gradient_tol = 1e-6;  // on the projected-gradient infinity norm
  double armijo = 1e-4;
  int max_backtracks = 40;
  double step_tol = 1e-10;     // stop once an accepted step is this small (infinity norm)
};

enum class BoxSqpStatus {
  kConverged,       // projected gradient below tolerance
  kStalled,         // no descent possible, or steps below step_tol
  kMaxIterations,
  kNonFinite,
};

struct BoxSqpResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  BoxSqpStatus status = BoxSqpStatus::kMaxIterations;

  bool converged() const { return status == BoxSqpStatus::kConverged || status == BoxSqpStatus::kStalled; }
};

/// Box-constrained sequential quadratic programming with a damped BFGS model.
///
/// Each iteration fixes the variables held at a bound by the gradient, solves
/// the quadratic model over the free variables, and runs a projected Armijo
/// backtracking search along the bound-clipped path. The start point is
/// projected into the box first. The returned point is always box-feasible and
/// never worse than the (projected) start.
BoxSqpResult minimize_box(const ObjectiveFn& objective, const Eigen::VectorXd& start,
                          const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                          const BoxSqpOptions& options, const AcceptFn& accept = {});

/// Infinity norm of x - P(x - g).
double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& gradient,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

}  // namespace teleop
