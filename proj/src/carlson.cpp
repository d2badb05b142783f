#include "fracspec/carlson.hpp"

#include <cmath>
#include <limits>

#include "numerics.hpp"

namespace fracspec {

namespace {

double sup_half_plane(const Sampler& h, const CarlsonOptions& opt, CarlsonFit& partial) {
  double sup = 0.0;
  const int steps = static_cast<int>(std::floor(opt.grid_radius / opt.grid_step));
  for (int i = 0; i <= steps; ++i)
    for (int j = -steps; j <= steps; ++j) {
      std::complex<double> z(i * opt.grid_step, j * opt.grid_step);
      if (std::abs(z) > opt.grid_radius) continue;
      double v = std::abs(h(z));
      if (!std::isfinite(v)) {
        partial.sup_grid = sup;
        throw CarlsonRangeError("sample overflow on the half-plane grid", partial);
      }
      sup = std::max(sup, v);
    }
  return sup;
}

}  // namespace

CarlsonFit fit_growth(const Sampler& h, const CarlsonOptions& opt, const MomentSchedule* schedule) {
  CarlsonFit fit;
  fit.gap = schedule ? schedule->gap() : std::numeric_limits<double>::quiet_NaN();

  const int ny = static_cast<int>(std::floor(opt.y_max / opt.grid_step));
  for (int j = -ny; j <= ny; ++j) {
    double v = std::abs(h(std::complex<double>(0.0, j * opt.grid_step)));
    if (!std::isfinite(v)) throw CarlsonRangeError("sample overflow on the imaginary axis", fit);
    fit.c1_imag = std::max(fit.c1_imag, v);
  }

  Eigen::MatrixXd X(opt.real_samples, 3);
  Eigen::VectorXd y(opt.real_samples);
  bool zero_seen = false;
  for (int i = 0; i < opt.real_samples; ++i) {
    double x = opt.x_min + (opt.x_max - opt.x_min) * i / (opt.real_samples - 1);
    double v = std::abs(h(x));
    if (!std::isfinite(v)) throw CarlsonRangeError("sample overflow on the real axis", fit);
    if (v == 0.0) zero_seen = true;
    X.row(i) << 2.0 * x * std::log(x), x, 1.0;
    y[i] = zero_seen ? 0.0 : std::log(v);
  }
  if (!zero_seen) {
    auto lf = detail::least_squares(X, y);
    fit.tau = lf.coef[0];
    fit.tau_residual = lf.max_residual;
    fit.tau_defined = fit.tau_residual < opt.residual_threshold;
  }
  fit.sup_grid = sup_half_plane(h, opt, fit);
  return fit;
}

VanishingReport check_vanishing(const Sampler& h, const MomentSchedule& s, double tol, const CarlsonOptions& opt) {
  VanishingReport rep;
  for (int k = 1; k <= s.size(); ++k) {
    double v = std::abs(h(s.b(k)));
    rep.max_schedule = std::max(rep.max_schedule, v);
    if (s.is_fractional(k)) rep.max_fractional = std::max(rep.max_fractional, v);
    else rep.max_integer = std::max(rep.max_integer, v);
  }
  CarlsonFit scratch;
  rep.sup_grid = sup_half_plane(h, opt, scratch);
  if (rep.max_schedule <= tol) rep.verdict = rep.sup_grid <= 10.0 * tol ? "consistent-with-zero" : "separating";
  else rep.verdict = "nonvanishing";
  return rep;
}

}  // namespace fracspec
