#pragma once

#include <Eigen/Dense>

namespace hamid {

/// Matrix exponential by scaling-and-squaring with a (6,6) Pade approximant.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

}  // namespace hamid
