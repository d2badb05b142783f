#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "fracspec/model.hpp"

namespace th {

inline constexpr double kPi = std::numbers::pi;

inline fracspec::Profile flat() {
  return [](double) { return 1.0; };
}

inline fracspec::Profile bump(double amp, double kappa, double center, double L = 2.0 * kPi) {
  fracspec::MetricProfile p;
  p.kind = fracspec::MetricProfile::Kind::Bump;
  p.amp = amp;
  p.kappa = kappa;
  p.center = center;
  return p.bind(L);
}

// Eigenvalue of the uniform periodic second-difference operator.
inline double flat_discrete_eigenvalue(int k, int n, double L) {
  double h = L / n;
  double s = std::sin(k * h / 2.0);
  return 4.0 * s * s / (h * h);
}

inline double max_rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double sc = b.cwiseAbs().maxCoeff();
  return (a - b).cwiseAbs().maxCoeff() / (sc > 0 ? sc : 1.0);
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

}  // namespace th
