#include "hamid/expm.hpp"

#include <cmath>

namespace hamid {

// Pade (6,6): exp(A) ~ q(A)^-1 p(A) with p/q built from the coefficients
// c_k = (12-k)! 6! / (12! k! (6-k)!).
Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm

  int squarings = 0;
  if (norm > 0.5) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / 0.5))));
  }
  const Eigen::MatrixXd as = a / std::pow(2.0, squarings);

  static const double c[7] = {1.0,
                              1.0 / 2.0,
                              5.0 / 44.0,
                              1.0 / 66.0,
                              1.0 / 792.0,
                              1.0 / 15840.0,
                              1.0 / 665280.0};

  const Eigen::MatrixXd a2 = as * as;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a4 * a2;
  const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);

  const Eigen::MatrixXd even = c[0] * i + c[2] * a2 + c[4] * a4 + c[6] * a6;
  const Eigen::MatrixXd odd = as * (c[1] * i + c[3] * a2 + c[5] * a4);

  // p = even + odd, q = even - odd
  Eigen::MatrixXd r = (even - odd).partialPivLu().solve(even + odd);
  for (int s = 0; s < squarings; ++s) r = r * r;
  return r;
}

}  // namespace hamid
