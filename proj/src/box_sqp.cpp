#include "teleop/box_sqp.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace teleop {
namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

}  // namespace

double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& gradient,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  if (x.size() == 0) return 0.0;
  return (x - project(x - gradient, lower, upper)).cwiseAbs().maxCoeff();
}

BoxSqpResult minimize_box(const ObjectiveFn& objective, const Eigen::VectorXd& start,
                          const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                          const BoxSqpOptions& options, const AcceptFn& accept) {
  const Eigen::Index n = start.size();
  BoxSqpResult r;
  r.x = project(start, lower, upper);
  Eigen::VectorXd g(n);
  r.value = objective(r.x, &g);
  r.evaluations = 1;
  if (!std::isfinite(r.value) || !g.allFinite()) {
    r.status = BoxSqpStatus::kNonFinite;
    return r;
  }
  // An infeasible start cannot be kept feasible; fall back to plain descent.
  const bool gate = accept && accept(r.x);

  Eigen::MatrixXd hessian = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  constexpr double kBoundEps = 1e-12;

  for (int it = 0; it < options.max_iterations; ++it) {
    r.iterations = it;
    if (projected_gradient_norm(r.x, g, lower, upper) < options.gradient_tol) {
      r.status = BoxSqpStatus::kConverged;
      return r;
    }

    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lower = r.x[i] <= lower[i] + kBoundEps && g[i] > 0.0;
      const bool at_upper = r.x[i] >= upper[i] - kBoundEps && g[i] < 0.0;
      if (!at_lower && !at_upper) free.push_back(i);
    }

    auto quasi_newton_direction = [&]() {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
      const auto m = static_cast<Eigen::Index>(free.size());
      if (m == 0) return d;
      Eigen::MatrixXd hff(m, m);
      Eigen::VectorXd gf(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        gf[a] = g[free[a]];
        for (Eigen::Index b = 0; b < m; ++b) hff(a, b) = hessian(free[a], free[b]);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(hff);
      if (llt.info() != Eigen::Success) return d;
      const Eigen::VectorXd df = llt.solve(-gf);
      for (Eigen::Index a = 0; a < m; ++a) d[free[a]] = df[a];
      return d;
    };
    auto steepest_direction = [&]() {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i : free) d[i] = -g[i];
      return d;
    };

    bool accepted = false;
    Eigen::VectorXd x_new;
    Eigen::VectorXd g_new(n);
    double f_new = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Eigen::VectorXd d = attempt == 0 ? quasi_newton_direction() : steepest_direction();
      if (attempt == 0 && !(g.dot(d) < 0.0)) continue;
      if (attempt == 1) {
        hessian.setIdentity();
        scaled = false;
      }
      double t = 1.0;
      bool first_trial = true;
      for (int bt = 0; bt < options.max_backtracks; ++bt, t *= 0.5) {
        x_new = project(r.x + t * d, lower, upper);
        const Eigen::VectorXd step = x_new - r.x;
        if (step.cwiseAbs().maxCoeff() == 0.0) break;
        const double slope = g.dot(step);
        if (!(slope < 0.0)) continue;
        if (gate && !accept(x_new)) continue;
        // The full step usually succeeds, so it gets the gradient up front;
        // backtracking trials are value-only.
        const bool with_gradient = first_trial;
        first_trial = false;
        f_new = objective(x_new, with_gradient ? &g_new : nullptr);
        ++r.evaluations;
        if (std::isfinite(f_new) && f_new <= r.value + options.armijo * slope) {
          if (!with_gradient) {
            f_new = objective(x_new, &g_new);
            ++r.evaluations;
          }
          if (std::isfinite(f_new) && g_new.allFinite()) {
            accepted = true;
            break;
          }
        }
      }
    }
    if (!accepted) {
      r.status = BoxSqpStatus::kStalled;
      return r;
    }

    // Damped BFGS keeps the model positive definite.
    const Eigen::VectorXd s = x_new - r.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (!scaled && sy > 0.0) {
      hessian = Eigen::MatrixXd::Identity(n, n) * (y.squaredNorm() / sy);
      scaled = true;
    }
    const Eigen::VectorXd bs = hessian * s;
    const double sbs = s.dot(bs);
    if (sbs > 1e-300) {
      const double theta = sy >= 0.2 * sbs ? 1.0 : 0.8 * sbs / (sbs - sy);
      const Eigen::VectorXd rvec = theta * y + (1.0 - theta) * bs;
      const double sr = s.dot(rvec);
      if (sr > 1e-300) hessian += rvec * rvec.transpose() / sr - bs * bs.transpose() / sbs;
    }

    const double step_size = s.cwiseAbs().maxCoeff();
    r.x = x_new;
    r.value = f_new;
    g = g_new;
    if (step_size < options.step_tol) {
      r.iterations = it + 1;
      r.status = projected_gradient_norm(r.x, g, lower, upper) < options.gradient_tol ? BoxSqpStatus::kConverged
                                                                                      : BoxSqpStatus::kStalled;
      return r;
    }
  }
  r.iterations = options.max_iterations;
  r.status = projected_gradient_norm(r.x, g, lower, upper) < options.gradient_tol ? BoxSqpStatus::kConverged
                                                                                  : BoxSqpStatus::kMaxIterations;
  return r;
}

}  // namespace teleop
