#include "doctest.h"
#include "fracspec/errors.hpp"
#include "fracspec/forward.hpp"
#include "fracspec/probes.hpp"
#include "helpers.hpp"

using namespace fracspec;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

const TwoArcModel& flat_model() {
  static TwoArcModel t = build_two_arc_model(256, 0.5, th::flat(), th::flat());
  return t;
}

const TwoArcModel& bumpy_model() {
  static TwoArcModel t = build_two_arc_model(256, 0.5, th::bump(0.2, 8.0, 1.5), th::bump(0.3, 10.0, 4.2));
  return t;
}

Eigen::VectorXd zero_mean(const SpectralModel& m, Eigen::VectorXd u) {
  u.array() -= m.mean(u);
  return u;
}

Eigen::VectorXd smooth_zero_mean(const SpectralModel& m) {
  Eigen::VectorXd u(m.n);
  for (int i = 0; i < m.n; ++i) u[i] = std::cos(m.coords[i]) + 0.5 * std::sin(2 * m.coords[i]) + 0.2;
  return zero_mean(m, u);
}

// Mean-zero source supported in the observed interior.
Eigen::VectorXd dipole(const ObservationRegion& r, const SpectralModel& m, int a, int b) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(m.n);
  f[a] = 1.0 / m.weights[a];
  f[b] = -1.0 / m.weights[b];
  (void)r;
  return f;
}

}  // namespace

TEST_CASE("fractional Laplacian basic identities") {
  const SpectralModel& m = bumpy_model().model;
  CHECK(fractional_laplacian_apply(m, 0.5, Eigen::VectorXd::Constant(m.n, 3.0)).cwiseAbs().maxCoeff() < 1e-10);
  for (int k : {1, 5, 20}) {
    Eigen::VectorXd phi = m.eigenblocks[k].col(0);
    Eigen::VectorXd out = fractional_laplacian_apply(m, 0.3, phi);
    CHECK(th::max_rel(out, std::pow(m.lambda[m.block_start[k]], 0.3) * phi) < 1e-10);
  }
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd u = zero_mean(m, th::random_vector(rng, m.n));
    Eigen::VectorXd ku = m.apply_laplacian(u);
    CHECK((fractional_laplacian_apply(m, 1.0, u) - ku).norm() <= 1e-8 * ku.norm());
  }
  CHECK(kind_of([&] { fractional_laplacian_apply(m, 0.0, Eigen::VectorXd::Zero(m.n)); }) == ErrorKind::InvalidParameter);
  CHECK(kind_of([&] { fractional_laplacian_apply(m, 1.2, Eigen::VectorXd::Zero(m.n)); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("solve_fractional") {
  const SpectralModel& m = bumpy_model().model;
  Eigen::VectorXd phi = m.eigenblocks[1].col(0);
  CHECK(th::max_rel(solve_fractional(m, 0.5, phi), std::pow(m.lambda[m.block_start[1]], -0.5) * phi) < 1e-10);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd f = zero_mean(m, th::random_vector(rng, m.n));
    double alpha = 0.1 + 0.8 * trial / 4.0;
    Eigen::VectorXd u = solve_fractional(m, alpha, f);
    CHECK((fractional_laplacian_apply(m, alpha, u) - f).cwiseAbs().maxCoeff() <= 1e-9 * f.cwiseAbs().maxCoeff());
    CHECK(std::abs(m.mean(u)) < 1e-12 * u.cwiseAbs().maxCoeff());
  }
  Eigen::VectorXd f = smooth_zero_mean(m);
  f.array() += 0.1;
  CHECK(kind_of([&] { solve_fractional(m, 0.5, f); }) == ErrorKind::Compatibility);
}

TEST_CASE("source_to_solution") {
  const TwoArcModel& t = bumpy_model();
  Eigen::VectorXd f = dipole(t.region, t.model, 30, 70);
  Eigen::VectorXd out = source_to_solution(t.model, t.region, 0.5, f);
  CHECK(out.size() == t.region.size());

  TwoArcModel copy = build_two_arc_model(256, 0.5, th::bump(0.2, 8.0, 1.5), th::bump(0.3, 10.0, 4.2));
  CHECK((source_to_solution(copy.model, copy.region, 0.5, f) - out).cwiseAbs().maxCoeff() <= 1e-12 * out.cwiseAbs().maxCoeff());

  Eigen::VectorXd leak = f;
  leak[200] = 1.0;
  CHECK(kind_of([&] { source_to_solution(t.model, t.region, 0.5, leak); }) == ErrorKind::Support);
  Eigen::VectorXd edge = dipole(t.region, t.model, 0, 40);
  CHECK(kind_of([&] { source_to_solution(t.model, t.region, 0.5, edge); }) == ErrorKind::Support);

  ForwardMap fm(t.model, t.region, 0.5);
  CHECK((fm(t.region.restrict(f)) - out).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("source-to-solution map is symmetric and positive") {
  const TwoArcModel& t = bumpy_model();
  ForwardMap L(t.model, t.region, 0.4);
  std::mt19937_64 rng(3);
  auto random_source = [&]() {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(t.region.size());
    std::normal_distribution<double> g;
    for (int i : t.region.interior_idx) f[t.region.local_index(i)] = g(rng);
    double mean = f.dot(t.region.local_weights) / t.region.local_weights.sum();
    for (int i : t.region.interior_idx) f[t.region.local_index(i)] -= mean;
    // interior weights cover the support, boundary entries are zero
    for (int s : t.region.boundary_idx) f[t.region.local_index(s)] = 0.0;
    double corr = f.dot(t.region.local_weights);
    f[t.region.local_index(t.region.interior_idx[5])] -= corr / t.region.local_weights[t.region.local_index(t.region.interior_idx[5])];
    return f;
  };
  auto ip = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.cwiseProduct(t.region.local_weights).dot(b); };
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd f = random_source(), g = random_source();
    double lhs = ip(L(f), g), rhs = ip(f, L(g));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (std::abs(lhs) + std::abs(rhs)));
    CHECK(ip(L(f), f) > 0.0);
  }
}

TEST_CASE("fractional powers compose and approach the Laplacian") {
  const SpectralModel& m = bumpy_model().model;
  std::mt19937_64 rng(9);
  for (auto [a, b] : {std::pair{0.2, 0.3}, std::pair{0.5, 0.5}, std::pair{0.1, 0.75}}) {
    Eigen::VectorXd u = zero_mean(m, th::random_vector(rng, m.n));
    Eigen::VectorXd two = fractional_laplacian_apply(m, b, fractional_laplacian_apply(m, a, u));
    Eigen::VectorXd one = fractional_laplacian_apply(m, a + b, u);
    CHECK((two - one).norm() <= 1e-9 * one.norm());
  }
  Eigen::VectorXd u = smooth_zero_mean(m);
  Eigen::VectorXd lu = m.apply_laplacian(u);
  CHECK((fractional_laplacian_apply(m, 0.999, u) - lu).norm() <= 5e-3 * lu.norm());
}

TEST_CASE("iterated_laplacian_local") {
  const TwoArcModel& t = bumpy_model();
  const ObservationRegion& r = t.region;
  Eigen::VectorXd F = mollifier_source(r, {64, 0.5, 1.5});
  Eigen::VectorXd direct = r.restrict(t.model.apply_laplacian(r.extend(F)));
  Eigen::VectorXd local = iterated_laplacian_local(r, F, 1);
  CHECK((local - direct).cwiseAbs().maxCoeff() <= 1e-12 * direct.cwiseAbs().maxCoeff());

  for (int m = 1; m <= 8; ++m) {
    Eigen::VectorXd v = iterated_laplacian_local(r, F, m);
    double mass = v.cwiseAbs().dot(r.local_weights);
    CHECK(std::abs(v.dot(r.local_weights)) <= 1e-10 * mass);
    Eigen::VectorXd full = r.extend(F);
    for (int s = 0; s < m; ++s) full = t.model.apply_laplacian(full);
    CHECK(th::max_rel(v, r.restrict(full)) < 1e-9);
  }
  Eigen::VectorXd near = mollifier_source(r, {14, 0.3, 1.5});
  CHECK(kind_of([&] { iterated_laplacian_local(r, near, 3); }) == ErrorKind::Locality);
}

TEST_CASE("direct DtN") {
  const TwoArcModel& t = flat_model();
  for (double lam : {1.0, 10.0, 100.0}) {
    DtnData d = dtn_direct(t.model, t.region, lam);
    CHECK(d.nd_residual <= 1e-10);
    CHECK((d.dtn - d.dtn.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    // hidden arc is flat with length pi: eigenvalues -sqrt(l) tanh, -sqrt(l) coth of sqrt(l) pi / 2
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.dtn);
    double s = std::sqrt(lam), half = s * th::kPi / 2;
    double e_coth = -s / std::tanh(half), e_tanh = -s * std::tanh(half);
    CHECK(std::abs(es.eigenvalues()[0] - e_coth) <= 0.02 * std::abs(e_coth));
    CHECK(std::abs(es.eigenvalues()[1] - e_tanh) <= 0.02 * std::abs(e_tanh));
  }
  CHECK(kind_of([&] { dtn_direct(t.model, t.region, 0.0); }) == ErrorKind::InvalidParameter);
  DtnData d = dtn_direct(bumpy_model().model, bumpy_model().region, 1.0);
  CHECK(d.nd_residual <= 1e-10);
}

TEST_CASE("source_to_dirichlet_neumann") {
  const TwoArcModel& t = bumpy_model();
  auto [tr0, dn0] = source_to_dirichlet_neumann(t.model, t.region, 1.0, Eigen::VectorXd::Zero(t.model.n));
  CHECK(tr0.cwiseAbs().maxCoeff() == 0.0);
  CHECK(dn0.cwiseAbs().maxCoeff() == 0.0);

  DtnData d = dtn_direct(t.model, t.region, 1.0);
  Eigen::VectorXd f = t.region.extend(mollifier_source(t.region, {40, 0.5, 1.5}));
  auto [tr, dn] = source_to_dirichlet_neumann(t.model, t.region, 1.0, f);
  CHECK((dn - d.dtn * tr).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(kind_of([&] { source_to_dirichlet_neumann(t.model, t.region, -1.0, f); }) == ErrorKind::InvalidParameter);

  // every boundary target is reached by a least-squares combination of sources
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 4; ++trial) {
    Eigen::VectorXd h = th::random_vector(rng, 2);
    Eigen::VectorXd c = d.dirichlet_map.colPivHouseholderQr().solve(h);
    CHECK((d.dirichlet_map * c - h).norm() <= 1e-8 * h.norm());
  }
}
