#pragma once

#include <Eigen/Dense>
#include <functional>

namespace hamid {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LmOptions {
  double lambda0 = 1e-3;
  double nu = 10.0;
  double jacobian_rel_step = 1e-6;
  double param_tol = 1e-8;      // relative parameter change
  double residual_tol = 1e-10;  // relative residual change
  int max_iterations = 200;
  Eigen::VectorXd lower;  // optional box bounds (empty = unbounded)
  Eigen::VectorXd upper;
};

struct LmResult {
  Eigen::VectorXd x;
  Eigen::MatrixXd covariance;  // unscaled (J^T J)^-1 at the optimum
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Gauss-Newton with multiplicative lambda adaptation (divide by nu on
/// an accepted step, multiply on rejection) and forward-difference Jacobian.
/// Never throws on non-convergence; returns best-so-far with converged=false.
LmResult levenberg_marquardt(const ResidualFn& fn, const Eigen::VectorXd& init,
                             const LmOptions& opts = {});

}  // namespace hamid
