#include "fracspec/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "numerics.hpp"

namespace fracspec {

namespace {

Error probe_error(ErrorKind k, const std::string& msg) { return Error(k, "probes", msg); }

void check_index(double np) {
  if (!(np > 1.0 && np < 2.0)) throw probe_error(ErrorKind::InvalidParameter, "Gevrey index must lie in (1, 2)");
}

// E(s) = exp(-s^{-sigma}), identically zero for s <= 0.
Jet flat_exp(const Jet& s, double sigma) {
  if (s.c[0] <= 0.0) return Jet{};
  Jet inner = jet_exp((-sigma) * jet_log(s));
  if (!std::isfinite(inner.c[0]) || std::exp(-inner.c[0]) == 0.0) return Jet{};
  return jet_exp(Jet{} - inner);
}

Jet chi0_jet(double np, double t) {
  const double sigma = 1.0 / (np - 1.0);
  Jet x = Jet::variable(t);
  Jet x2 = x * x;
  Jet a = flat_exp(Jet::constant(1.0) - x2, sigma);
  Jet b = flat_exp(x2 - Jet::constant(0.25), sigma);
  Jet d = a + b;
  if (d.c[0] == 0.0) return Jet{};
  if (b.c[0] == 0.0) return a / a;
  return a / d;
}

double periodic_distance(double a, double b, double L) {
  double d = std::fmod(std::abs(a - b), L);
  return std::min(d, L - d);
}

}  // namespace

Jet Jet::variable(double t) {
  Jet j;
  j.c[0] = t;
  j.c[1] = 1.0;
  return j;
}

Jet Jet::constant(double v) {
  Jet j;
  j.c[0] = v;
  return j;
}

double Jet::derivative(int k) const { return std::exp(std::lgamma(k + 1.0)) * c[k]; }

Jet operator+(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k <= kJetOrder; ++k) r.c[k] = a.c[k] + b.c[k];
  return r;
}

Jet operator-(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k <= kJetOrder; ++k) r.c[k] = a.c[k] - b.c[k];
  return r;
}

Jet operator*(double s, const Jet& a) {
  Jet r;
  for (int k = 0; k <= kJetOrder; ++k) r.c[k] = s * a.c[k];
  return r;
}

Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k <= kJetOrder; ++k)
    for (int i = 0; i <= k; ++i) r.c[k] += a.c[i] * b.c[k - i];
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  Jet q;
  for (int k = 0; k <= kJetOrder; ++k) {
    double s = a.c[k];
    for (int i = 1; i <= k; ++i) s -= b.c[i] * q.c[k - i];
    q.c[k] = s / b.c[0];
  }
  return q;
}

Jet jet_exp(const Jet& a) {
  Jet e;
  e.c[0] = std::exp(a.c[0]);
  for (int k = 1; k <= kJetOrder; ++k) {
    double s = 0.0;
    for (int i = 1; i <= k; ++i) s += i * a.c[i] * e.c[k - i];
    e.c[k] = s / k;
  }
  return e;
}

Jet jet_log(const Jet& a) {
  Jet l;
  l.c[0] = std::log(a.c[0]);
  for (int k = 1; k <= kJetOrder; ++k) {
    double s = 0.0;
    for (int i = 1; i < k; ++i) s += i * l.c[i] * a.c[k - i];
    l.c[k] = (a.c[k] - s / k) / a.c[0];
  }
  return l;
}

double chi0(double np, double t) {
  check_index(np);
  return chi0_jet(np, t).c[0];
}

Eigen::VectorXd chebyshev_lobatto(int count) {
  Eigen::VectorXd t(count);
  for (int j = 0; j < count; ++j) t[j] = std::cos(std::numbers::pi * j / (count - 1));
  return t;
}

BumpSamples gevrey_bump(double np, const Eigen::VectorXd& points) {
  check_index(np);
  BumpSamples s;
  s.gevrey_index = np;
  s.points = points;
  s.derivatives.resize(kJetOrder + 1, points.size());
  for (int j = 0; j < points.size(); ++j) {
    Jet c = chi0_jet(np, points[j]);
    for (int k = 0; k <= kJetOrder; ++k) s.derivatives(k, j) = c.derivative(k);
  }
  return s;
}

GrowthFit bump_derivative_growth(double np, int max_order, int grid_points) {
  check_index(np);
  if (max_order < 3 || max_order > kJetOrder)
    throw probe_error(ErrorKind::InvalidParameter, "derivative order must lie in [3, 12]");
  BumpSamples s = gevrey_bump(np, chebyshev_lobatto(grid_points));
  GrowthFit fit;
  Eigen::MatrixXd X(max_order, 3);
  Eigen::VectorXd y(max_order);
  for (int k = 1; k <= max_order; ++k) {
    double sup = s.derivatives.row(k).cwiseAbs().maxCoeff();
    fit.norms.push_back(sup);
    X.row(k - 1) << k, std::lgamma(k + 1.0), 1.0;
    y[k - 1] = std::log(sup);
  }
  auto lf = detail::least_squares(X, y);
  fit.log_c = lf.coef[0];
  fit.exponent = lf.coef[1];
  fit.intercept = lf.coef[2];
  fit.residual = lf.max_residual;
  return fit;
}

double chi0_mass(double np) {
  check_index(np);
  // chi_0 = 1 on [-1/2, 1/2]; Simpson on the transition interval, doubled by symmetry.
  const int m = 20000;
  const double a = 0.5, b = 1.0, hh = (b - a) / m;
  double s = chi0(np, a) + chi0(np, b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * chi0(np, a + i * hh);
  return 1.0 + 2.0 * s * hh / 3.0;
}

double support_radius_limit(const ObservationRegion& r, int center) {
  if (!r.is_interior(center)) throw probe_error(ErrorKind::Support, "mollifier centre is not an interior node");
  double best = r.circumference;
  for (int i = 0; i < r.n_nodes; ++i) {
    if (r.is_interior(i)) continue;
    best = std::min(best, periodic_distance(i * r.h, center * r.h, r.circumference));
  }
  return best;
}

Eigen::VectorXd mollifier_source(const ObservationRegion& r, const MollifierSpec& spec) {
  check_index(spec.gevrey_index);
  if (!(spec.radius > 0.0)) throw probe_error(ErrorKind::InvalidParameter, "radius must be positive");
  double d0 = support_radius_limit(r, spec.center);
  if (spec.radius >= d0) throw probe_error(ErrorKind::Support, "radius reaches outside the observed interior");
  Eigen::VectorXd F = Eigen::VectorXd::Zero(r.size());
  const double qx = spec.center * r.h;
  for (int a = 0; a < r.size(); ++a) {
    double t = periodic_distance(r.local_coords[a], qx, r.circumference) / spec.radius;
    if (t < 1.0) F[a] = chi0(spec.gevrey_index, t) / spec.radius;
  }
  return F;
}

MomentSchedule::MomentSchedule(double a, int m) : alpha(a), max_m(m) {
  if (!(a > 0.0 && a < 1.0)) throw probe_error(ErrorKind::InvalidParameter, "alpha must lie in (0, 1)");
  if (m < 1) throw probe_error(ErrorKind::InvalidParameter, "max_m must be positive");
}

double MomentSchedule::b(int k) const {
  if (k < 1 || k > size()) throw probe_error(ErrorKind::InvalidParameter, "schedule index out of range");
  int m = (k + 1) / 2;
  return k % 2 ? m - alpha : double(m);
}

std::vector<double> MomentSchedule::exponents() const {
  std::vector<double> e;
  for (int k = 1; k <= size(); ++k) e.push_back(b(k));
  return e;
}

double MomentSchedule::gap() const {
  double g = 1e300;
  for (int k = 1; k < size(); ++k) g = std::min(g, b(k + 1) - b(k));
  return g;
}

int zeta_truncation_order(std::complex<double> z, int n) {
  if (z.real() >= 0.0) return static_cast<int>(std::ceil(z.real())) + n + 1;
  return n + 1;
}

ZetaVector zeta_oracle_observed(const SpectralModel& model, const ObservationRegion& r, const Eigen::VectorXd& f,
                                std::complex<double> z, double tail_tol, int max_blocks) {
  Eigen::VectorXd F = r.extend(f);
  for (int a = 0; a < r.size(); ++a)
    if (f[a] != 0.0 && !r.is_interior(r.observed_idx[a]))
      throw probe_error(ErrorKind::Support, "source must be supported in the observed interior");
  const Eigen::VectorXd c = model.coefficients(F);
  const int nb = model.num_blocks();
  const int last = max_blocks > 0 ? std::min(nb - 1, max_blocks) : nb - 1;
  const int m = zeta_truncation_order(z, model.dimension_n);

  double norm_m = 0.0;
  for (int j = 1; j < model.n; ++j) norm_m += std::pow(model.lambda[j], 2.0 * m) * c[j] * c[j];
  norm_m = std::sqrt(norm_m);

  // tail[k] bounds the contribution of blocks k..nb-1 at any node.
  std::vector<double> tail(nb + 1, 0.0);
  for (int k = nb - 1; k >= 1; --k) {
    double sup = 0.0;
    for (int l = 0; l < model.multiplicities[k]; ++l) sup += model.eigenblocks[k].col(l).cwiseAbs().maxCoeff();
    tail[k] = tail[k + 1] + std::pow(model.lambda[model.block_start[k]], z.real() - m) * norm_m * sup;
  }

  ZetaVector out;
  out.values = Eigen::VectorXcd::Zero(r.size());
  int k = 1;
  for (; k <= last; ++k) {
    const int s = model.block_start[k];
    const int d = model.multiplicities[k];
    for (int j = s; j < s + d; ++j) {
      std::complex<double> lz = std::exp(z * std::log(model.lambda[j])) * c[j];
      for (int a = 0; a < r.size(); ++a) out.values[a] += lz * model.basis(r.observed_idx[a], j);
    }
    if (tail[k + 1] < tail_tol) {
      ++k;
      break;
    }
  }
  out.blocks_used = k - 1;
  out.tail_bound = tail[k];
  out.truncation_warning = out.tail_bound >= tail_tol;
  return out;
}

ZetaValue zeta_oracle(const SpectralModel& model, const ObservationRegion& r, const Eigen::VectorXd& f,
                      std::complex<double> z, int node, double tail_tol, int max_blocks) {
  int a = r.local_index(node);
  if (a < 0) throw probe_error(ErrorKind::InvalidParameter, "evaluation node is not observed");
  ZetaVector v = zeta_oracle_observed(model, r, f, z, tail_tol, max_blocks);
  return {v.values[a], v.blocks_used, v.tail_bound, v.truncation_warning};
}

Eigen::VectorXd zeta_measured(const ObservationRegion& r, const ForwardMap& forward, const MomentSchedule& sched,
                              const Eigen::VectorXd& f, int k) {
  sched.b(k);
  const int m = (k + 1) / 2;
  Eigen::VectorXd g = iterated_laplacian_local(r, f, m);
  if (sched.is_fractional(k)) return forward(g);
  return g;
}

namespace {

MomentTable empty_table(const ObservationRegion& r, const MomentSchedule& s, const std::vector<Eigen::VectorXd>& src,
                        const std::vector<std::string>& ids) {
  if (ids.size() != src.size()) throw probe_error(ErrorKind::InvalidParameter, "one identifier per source required");
  MomentTable t;
  t.schedule = s;
  t.source_ids = ids;
  t.nodes = r.observed_idx;
  for (size_t i = 0; i < src.size(); ++i) {
    t.values.push_back(Eigen::MatrixXcd::Zero(s.size(), r.size()));
    t.provenance.emplace_back(s.size(), Provenance::Measured);
    t.present.emplace_back(s.size(), 0);
  }
  return t;
}

}  // namespace

MomentTable moment_table_measured(const ObservationRegion& r, const ForwardMap& forward, const MomentSchedule& s,
                                  const std::vector<Eigen::VectorXd>& src, const std::vector<std::string>& ids) {
  MomentTable t = empty_table(r, s, src, ids);
  for (size_t i = 0; i < src.size(); ++i)
    for (int k = 1; k <= s.size(); ++k) {
      t.values[i].row(k - 1) = zeta_measured(r, forward, s, src[i], k).cast<std::complex<double>>().transpose();
      t.present[i][k - 1] = 1;
    }
  return t;
}

MomentTable moment_table_oracle(const SpectralModel& model, const ObservationRegion& r, const MomentSchedule& s,
                                const std::vector<Eigen::VectorXd>& src, const std::vector<std::string>& ids,
                                double tail_tol) {
  MomentTable t = empty_table(r, s, src, ids);
  for (size_t i = 0; i < src.size(); ++i)
    for (int k = 1; k <= s.size(); ++k) {
      t.values[i].row(k - 1) = zeta_oracle_observed(model, r, src[i], s.b(k), tail_tol).values.transpose();
      t.provenance[i][k - 1] = Provenance::Oracle;
      t.present[i][k - 1] = 1;
    }
  return t;
}

void write_moment_csv(std::ostream& os, const MomentTable& t) {
  os << "source_id,k,b_k,node,re_value,im_value,provenance\n";
  os.precision(17);
  for (int i = 0; i < t.num_sources(); ++i)
    for (int k = 1; k <= t.schedule.size(); ++k) {
      if (!t.present[i][k - 1]) continue;
      const char* prov = t.provenance[i][k - 1] == Provenance::Oracle ? "oracle" : "measured";
      for (size_t a = 0; a < t.nodes.size(); ++a) {
        auto v = t.values[i](k - 1, a);
        os << t.source_ids[i] << ',' << k << ',' << t.schedule.b(k) << ',' << t.nodes[a] << ',' << v.real() << ','
           << v.imag() << ',' << prov << '\n';
      }
    }
}

GrowthFit growth_audit(const ObservationRegion& r, const MollifierSpec& spec, int max_m) {
  if (max_m > 10) throw probe_error(ErrorKind::InvalidParameter, "max_m must not exceed 10");
  if (max_m < 3) throw probe_error(ErrorKind::InvalidParameter, "max_m must be at least 3 for a three-term fit");
  Eigen::VectorXd F = mollifier_source(r, spec);
  GrowthFit fit;
  fit.norms.push_back(F.cwiseAbs().maxCoeff());
  for (int m = 1; m <= max_m; ++m) {
    double v = iterated_laplacian_local(r, F, m).cwiseAbs().maxCoeff();
    if (!std::isfinite(v)) throw GrowthRangeError("iterated Laplacian overflowed at m = " + std::to_string(m), fit.norms);
    fit.norms.push_back(v);
  }
  Eigen::MatrixXd X(max_m, 3);
  Eigen::VectorXd y(max_m);
  for (int m = 1; m <= max_m; ++m) {
    X.row(m - 1) << m, std::lgamma(2.0 * m + 1.0), 1.0;
    y[m - 1] = std::log(fit.norms[m]);
  }
  auto lf = detail::least_squares(X, y);
  fit.log_c = lf.coef[0];
  fit.exponent = lf.coef[1];
  fit.intercept = lf.coef[2];
  fit.residual = lf.max_residual;
  return fit;
}

}  // namespace fracspec
