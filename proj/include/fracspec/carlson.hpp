#pragma once

#include <complex>
#include <functional>
#include <string>

#include "fracspec/errors.hpp"
#include "fracspec/probes.hpp"

namespace fracspec {

using Sampler = std::function<std::complex<double>(std::complex<double>)>;

struct CarlsonFit {
  double c1_imag = 0.0;     // sup |h(iy)|, |y| <= y_max
  double tau = 0.0;         // from log|h(x)| ~ 2 tau x log x + a x + b on [x_min, x_max]
  bool tau_defined = false;
  double tau_residual = 0.0;
  double gap = 0.0;         // schedule spacing, NaN without a schedule
  double sup_grid = 0.0;    // sup |h| over the right half-plane grid, |z| <= grid_radius
};

struct CarlsonOptions {
  double x_min = 2.0;
  double x_max = 12.0;
  double y_max = 15.0;
  double grid_radius = 15.0;
  double grid_step = 0.5;
  int real_samples = 41;
  double residual_threshold = 0.2;
};

class CarlsonRangeError : public Error {
 public:
  CarlsonRangeError(const std::string& what, CarlsonFit partial)
      : Error(ErrorKind::Range, "carlson", what), partial_fit(partial) {}
  CarlsonFit partial_fit;
};

CarlsonFit fit_growth(const Sampler& h, const CarlsonOptions& opt = {}, const MomentSchedule* schedule = nullptr);

struct VanishingReport {
  double max_schedule = 0.0;  // max |h(b_k)|
  double max_fractional = 0.0;
  double max_integer = 0.0;
  double sup_grid = 0.0;
  std::string verdict;        // consistent-with-zero | separating | nonvanishing
};

VanishingReport check_vanishing(const Sampler& h, const MomentSchedule& schedule, double tol,
                                const CarlsonOptions& opt = {});

}  // namespace fracspec
