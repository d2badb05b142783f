#include "fracspec/forward.hpp"

#include <cmath>

#include "fracspec/errors.hpp"

namespace fracspec {

namespace {

Error fwd_error(ErrorKind k, const std::string& msg) { return Error(k, "forward", msg); }

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw fwd_error(ErrorKind::InvalidParameter, "alpha must lie in (0, 1]");
}

Eigen::VectorXd spectral_power(const SpectralModel& m, double p, const Eigen::VectorXd& u) {
  Eigen::VectorXd c = m.coefficients(u);
  c[0] = 0.0;
  for (int j = 1; j < m.n; ++j) c[j] *= std::pow(m.lambda[j], p);
  return m.basis * c;
}

void check_boundary_orientation(const ObservationRegion& r) {
  for (size_t s = 0; s < r.boundary_idx.size(); ++s)
    if (r.normal_orientation[s] == 0 || r.inward_local[s] < 0)
      throw fwd_error(ErrorKind::InvalidRegion,
                      "boundary node " + std::to_string(r.boundary_idx[s]) + " lacks a single hidden neighbour");
}

}  // namespace

Eigen::VectorXd fractional_laplacian_apply(const SpectralModel& model, double alpha, const Eigen::VectorXd& u) {
  check_alpha(alpha);
  if (!u.allFinite()) throw fwd_error(ErrorKind::InvalidParameter, "input vector is not finite");
  return spectral_power(model, alpha, u);
}

Eigen::VectorXd solve_fractional(const SpectralModel& model, double alpha, const Eigen::VectorXd& f, double mean_tol) {
  check_alpha(alpha);
  Eigen::VectorXd wf = f.cwiseProduct(model.weights);
  double mass = wf.cwiseAbs().sum();
  if (std::abs(wf.sum()) > mean_tol * mass)
    throw fwd_error(ErrorKind::Compatibility, "source has nonzero weighted mean");
  return spectral_power(model, -alpha, f);
}

Eigen::VectorXd source_to_solution(const SpectralModel& model, const ObservationRegion& region, double alpha,
                                   const Eigen::VectorXd& f) {
  for (int i = 0; i < model.n; ++i)
    if (f[i] != 0.0 && !region.is_interior(i))
      throw fwd_error(ErrorKind::Support, "source leaks outside the observed interior at node " + std::to_string(i));
  return region.restrict(solve_fractional(model, alpha, f));
}

ForwardMap::ForwardMap(const SpectralModel& model, const ObservationRegion& region, double alpha)
    : model_(&model), region_(&region), alpha_(alpha) {
  check_alpha(alpha);
}

Eigen::VectorXd ForwardMap::operator()(const Eigen::VectorXd& f_observed) const {
  return source_to_solution(*model_, *region_, alpha_, region_->extend(f_observed));
}

Eigen::VectorXd iterated_laplacian_local(const ObservationRegion& r, const Eigen::VectorXd& f, int m) {
  if (m < 0) throw fwd_error(ErrorKind::InvalidParameter, "order must be nonnegative");
  const int no = r.size();
  if (f.size() != no) throw fwd_error(ErrorKind::InvalidParameter, "expected an observed vector");
  // Nodes whose value must stay zero so the next step never reads hidden data.
  std::vector<char> guarded(no, 0);
  for (int s : r.boundary_idx) guarded[r.local_index(s)] = 1;
  for (size_t s = 0; s < r.boundary_idx.size(); ++s) {
    int s_local = r.local_index(r.boundary_idx[s]);
    for (const auto& e : r.local_edges) {
      if (e.a == s_local) guarded[e.b] = 1;
      if (e.b == s_local) guarded[e.a] = 1;
    }
  }
  Eigen::VectorXd u = f;
  for (int step = 0; step < m; ++step) {
    for (int a = 0; a < no; ++a)
      if (guarded[a] && u[a] != 0.0)
        throw fwd_error(ErrorKind::Locality, "support reaches the boundary at step " + std::to_string(step + 1) +
                                                 " of " + std::to_string(m));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(no);
    for (const auto& e : r.local_edges) {
      double flux = e.conductance * (u[e.a] - u[e.b]);
      v[e.a] += flux;
      v[e.b] -= flux;
    }
    u = v.cwiseQuotient(r.local_weights);
  }
  return u;
}

DtnData dtn_direct(const SpectralModel& model, const ObservationRegion& r, double lambda) {
  if (!(lambda > 0.0)) throw fwd_error(ErrorKind::InvalidParameter, "lambda must be positive");
  check_boundary_orientation(r);
  const int n = model.n;
  const int ns = static_cast<int>(r.boundary_idx.size());
  const int nh = static_cast<int>(r.hidden_idx.size());
  const int ni = static_cast<int>(r.interior_idx.size());

  DtnData d;
  d.lambda = lambda;
  d.sigma_idx = r.boundary_idx;
  d.source_idx = r.interior_idx;

  std::vector<int> hpos(n, -1);
  for (int j = 0; j < nh; ++j) hpos[r.hidden_idx[j]] = j;

  Eigen::MatrixXd A(nh, nh), B(nh, ns);
  for (int a = 0; a < nh; ++a) {
    for (int b = 0; b < nh; ++b) A(a, b) = model.stiffness(r.hidden_idx[a], r.hidden_idx[b]);
    A(a, a) += lambda * model.weights[r.hidden_idx[a]];
    for (int s = 0; s < ns; ++s) B(a, s) = model.stiffness(r.hidden_idx[a], r.boundary_idx[s]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  Eigen::MatrixXd C = B.transpose() * llt.solve(B);
  d.dtn = C;
  for (int s = 0; s < ns; ++s) {
    int g = r.boundary_idx[s];
    int out = r.normal_orientation[s] > 0 ? (g + 1) % n : (g + n - 1) % n;
    int edge = r.normal_orientation[s] > 0 ? g : out;
    d.dtn(s, s) -= model.conductance[edge] + 0.5 * lambda * model.weights[g];
  }
  d.dtn = 0.5 * (d.dtn + d.dtn.transpose()).eval();

  Eigen::MatrixXd K = model.stiffness;
  K.diagonal() += lambda * model.weights;
  Eigen::LLT<Eigen::MatrixXd> full(K);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, ni);
  for (int c = 0; c < ni; ++c) rhs(r.interior_idx[c], c) = model.weights[r.interior_idx[c]];
  Eigen::MatrixXd X = full.solve(rhs);

  d.dirichlet_map.resize(ns, ni);
  d.neumann_map.resize(ns, ni);
  for (int s = 0; s < ns; ++s) {
    int g = r.boundary_idx[s];
    int out = r.normal_orientation[s] > 0 ? (g + 1) % n : (g + n - 1) % n;
    int edge = r.normal_orientation[s] > 0 ? g : out;
    d.dirichlet_map.row(s) = X.row(g);
    d.neumann_map.row(s) = model.conductance[edge] * (X.row(out) - X.row(g)) - 0.5 * lambda * model.weights[g] * X.row(g);
  }
  d.nd_residual = (d.neumann_map - d.dtn * d.dirichlet_map).cwiseAbs().maxCoeff();
  return d;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> source_to_dirichlet_neumann(const SpectralModel& model,
                                                                        const ObservationRegion& r, double lambda,
                                                                        const Eigen::VectorXd& f) {
  if (!(lambda > 0.0)) throw fwd_error(ErrorKind::InvalidParameter, "lambda must be positive");
  check_boundary_orientation(r);
  for (int i = 0; i < model.n; ++i)
    if (f[i] != 0.0 && !r.is_interior(i))
      throw fwd_error(ErrorKind::Support, "source leaks outside the observed interior at node " + std::to_string(i));
  Eigen::MatrixXd K = model.stiffness;
  K.diagonal() += lambda * model.weights;
  Eigen::VectorXd v = K.llt().solve(f.cwiseProduct(model.weights));
  Eigen::VectorXd dn = normal_derivative_observed(r, r.restrict(v), lambda);
  Eigen::VectorXd tr(r.boundary_idx.size());
  for (size_t s = 0; s < r.boundary_idx.size(); ++s) tr[s] = v[r.boundary_idx[s]];
  return {tr, dn};
}

Eigen::VectorXd normal_derivative_observed(const ObservationRegion& r, const Eigen::VectorXd& v, double lambda) {
  check_boundary_orientation(r);
  const int ns = static_cast<int>(r.boundary_idx.size());
  Eigen::VectorXd dn(ns);
  for (int s = 0; s < ns; ++s) {
    int sl = r.local_index(r.boundary_idx[s]);
    int il = r.inward_local[s];
    double c = 0.0;
    for (const auto& e : r.local_edges)
      if ((e.a == sl && e.b == il) || (e.a == il && e.b == sl)) c = e.conductance;
    dn[s] = c * (v[sl] - v[il]) + 0.5 * lambda * r.local_weights[sl] * v[sl];
  }
  return dn;
}

}  // namespace fracspec
