#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace fracspec::detail {

struct LinearFit {
  Eigen::VectorXd coef;
  double max_residual = 0.0;
};

inline LinearFit least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  LinearFit f;
  f.coef = X.colPivHouseholderQr().solve(y);
  f.max_residual = (X * f.coef - y).cwiseAbs().maxCoeff();
  return f;
}

}  // namespace fracspec::detail
