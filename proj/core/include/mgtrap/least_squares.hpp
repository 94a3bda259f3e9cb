#pragma once

#include <functional>

#include <Eigen/Core>

namespace mgtrap {

/// Nonlinear least-squares problem min 0.5 |r(p)|^2.
struct LeastSquaresProblem {
  int n_residuals = 0;
  std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r)> residuals;
  /// Optional analytic Jacobian dr/dp (n_residuals x n_params). Central
  /// differences are used when empty.
  std::function<void(const Eigen::VectorXd& p, Eigen::MatrixXd& jac)> jacobian;
  /// Optional projection applied after each step (simple bounds).
  std::function<void(Eigen::VectorXd& p)> project;
};

struct LeastSquaresOptions {
  int max_iterations = 200;
  double residual_tolerance = 0.0;  // stop when |r| falls below this
  double step_tolerance = 1e-14;    // relative step size
  double gradient_tolerance = 0.0;  // max |J^T r|
  double cost_tolerance = 1e-15;    // relative decrease of |r|^2 per accepted step
  double initial_lambda = 1e-3;
  double fd_step = 1e-7;            // relative finite-difference step
};

struct LeastSquaresResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd jacobian;  // at params
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling.
LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem, const Eigen::VectorXd& start,
                                       const LeastSquaresOptions& options = {});

/// Central-difference Jacobian of problem.residuals at p.
Eigen::MatrixXd numeric_jacobian(const LeastSquaresProblem& problem, const Eigen::VectorXd& p,
                                 double rel_step);

}  // namespace mgtrap
