#include "hamid/lm.hpp"

#include <cmath>
#include <limits>

namespace hamid {

namespace {

void clamp_to_bounds(Eigen::VectorXd& x, const LmOptions& opts) {
  if (opts.lower.size() == x.size())
    x = x.cwiseMax(opts.lower);
  if (opts.upper.size() == x.size())
    x = x.cwiseMin(opts.upper);
}

Eigen::MatrixXd forward_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& r0,
                                 const LmOptions& opts) {
  const Eigen::Index m = r0.size();
  const Eigen::Index p = x.size();
  Eigen::MatrixXd jac(m, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    // unit floor keeps the difference step well above cancellation noise
    // for parameters passing through zero
    const double step =
        opts.jacobian_rel_step * std::max(std::abs(x[j]), 1.0);
    Eigen::VectorXd xs = x;
    xs[j] += step;
    jac.col(j) = (fn(xs) - r0) / step;
  }
  return jac;
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFn& fn, const Eigen::VectorXd& init,
                             const LmOptions& opts) {
  constexpr double kLambdaFloor = 1e-12;
  constexpr double kLambdaCeil = 1e12;

  Eigen::VectorXd x = init;
  clamp_to_bounds(x, opts);
  Eigen::VectorXd r = fn(x);
  double cost = r.squaredNorm();
  double lambda = opts.lambda0;

  LmResult result;
  result.converged = false;

  const Eigen::Index p = x.size();
  Eigen::MatrixXd jtj_at_opt = Eigen::MatrixXd::Identity(p, p);

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    const Eigen::MatrixXd jac = forward_jacobian(fn, x, r, opts);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    jtj_at_opt = jtj;

    bool accepted = false;
    bool gauss_newton_trial = true;
    while (lambda <= kLambdaCeil) {
      // attempt the undamped Gauss-Newton step once per iteration (exact for
      // linear residuals), then fall back to damped steps
      const double lambda_eff = gauss_newton_trial ? 0.0 : lambda;
      Eigen::MatrixXd damped = jtj;
      damped.diagonal().array() += lambda_eff;
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      bool ok = step.allFinite();
      if (ok) {
        Eigen::VectorXd x_try = x + step;
        clamp_to_bounds(x_try, opts);
        const Eigen::VectorXd r_try = fn(x_try);
        const double cost_try = r_try.squaredNorm();
        if (std::isfinite(cost_try) && cost_try <= cost) {
          const double dx_rel =
              (x_try - x).norm() / std::max(x.norm(), 1e-300);
          const double dcost_rel =
              (cost - cost_try) / std::max(cost, 1e-300);
          x = x_try;
          r = r_try;
          cost = cost_try;
          lambda = std::max(kLambdaFloor, lambda / opts.nu);
          accepted = true;
          if (dx_rel < opts.param_tol || dcost_rel < opts.residual_tol) {
            result.converged = true;
          }
          break;
        }
        ok = false;
      }
      if (!ok) {
        if (gauss_newton_trial) {
          gauss_newton_trial = false;  // retry with the current lambda
        } else {
          lambda *= opts.nu;
        }
      }
    }
    if (!accepted) {
      // no downhill step at any damping: treat as converged-at-optimum
      result.converged = true;
      break;
    }
    if (result.converged) break;
  }

  result.x = x;
  result.residual_norm = std::sqrt(cost);
  result.iterations = iter + 1;
  {
    // recompute J at the optimum for the covariance
    const Eigen::MatrixXd jac = forward_jacobian(fn, x, r, opts);
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    jtj.diagonal().array() += kLambdaFloor;  // guard singular J^T J
    result.covariance = jtj.inverse();
  }
  return result;
}

}  // namespace hamid
