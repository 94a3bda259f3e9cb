#include "mgtrap/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

namespace mgtrap {

Eigen::MatrixXd numeric_jacobian(const LeastSquaresProblem& problem, const Eigen::VectorXd& p,
                                 double rel_step) {
  const int n = static_cast<int>(p.size());
  Eigen::MatrixXd jac(problem.n_residuals, n);
  Eigen::VectorXd rp(problem.n_residuals), rm(problem.n_residuals);
  for (int j = 0; j < n; ++j) {
    const double h = rel_step * std::max(std::abs(p(j)), 1e-8);
    Eigen::VectorXd q = p;
    q(j) = p(j) + h;
    problem.residuals(q, rp);
    q(j) = p(j) - h;
    problem.residuals(q, rm);
    jac.col(j) = (rp - rm) / (2.0 * h);
  }
  return jac;
}

LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem, const Eigen::VectorXd& start,
                                       const LeastSquaresOptions& options) {
  const int m = problem.n_residuals;
  const int n = static_cast<int>(start.size());

  auto jacobian_at = [&](const Eigen::VectorXd& p) {
    if (problem.jacobian) {
      Eigen::MatrixXd jac(m, n);
      problem.jacobian(p, jac);
      return jac;
    }
    return numeric_jacobian(problem, p, options.fd_step);
  };

  LeastSquaresResult out;
  Eigen::VectorXd p = start;
  if (problem.project) problem.project(p);
  Eigen::VectorXd r(m);
  problem.residuals(p, r);
  double cost = r.squaredNorm();
  if (!std::isfinite(cost)) {
    out.params = p;
    out.residual_norm = std::numeric_limits<double>::infinity();
    return out;
  }

  double lambda = options.initial_lambda;
  Eigen::MatrixXd jac = jacobian_at(p);
  Eigen::VectorXd r_trial(m);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    out.iterations = iter + 1;
    if (std::sqrt(cost) < options.residual_tolerance) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (options.gradient_tolerance > 0.0 && grad.cwiseAbs().maxCoeff() < options.gradient_tolerance) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-300);

    bool accepted = false;
    bool tiny_step = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      Eigen::VectorXd p_trial = p + step;
      if (problem.project) problem.project(p_trial);
      problem.residuals(p_trial, r_trial);
      const double cost_trial = r_trial.squaredNorm();
      const double actual_step = (p_trial - p).norm();
      if (actual_step <= options.step_tolerance * (p.norm() + options.step_tolerance)) tiny_step = true;
      if (std::isfinite(cost_trial) && cost_trial <= cost) {
        if (cost - cost_trial <= options.cost_tolerance * cost) tiny_step = true;
        p = p_trial;
        r = r_trial;
        cost = cost_trial;
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = true;
        break;
      }
      if (tiny_step) break;
      lambda *= 4.0;
    }
    if (accepted) jac = jacobian_at(p);
    if (tiny_step || !accepted) {
      // No further progress is possible at machine precision.
      out.converged = options.residual_tolerance <= 0.0 || std::sqrt(cost) < options.residual_tolerance;
      break;
    }
  }
  if (!out.converged && std::sqrt(cost) < options.residual_tolerance) out.converged = true;

  out.params = p;
  out.jacobian = jac;
  out.residual_norm = std::sqrt(cost);
  return out;
}

}  // namespace mgtrap
