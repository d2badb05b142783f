#include "fracspec/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "fracspec/errors.hpp"

namespace fracspec {

namespace {

Error rec_error(ErrorKind k, const std::string& msg) { return Error(k, "recovery", msg); }

struct ScaledMoments {
  Eigen::MatrixXd s;
  double rho = 1.0;
};

ScaledMoments scale_moments(const MomentMatrix& mm, ScaleStrategy strategy) {
  ScaledMoments out;
  const int M = mm.num_moments();
  if (strategy == ScaleStrategy::Geometric && M > 1) {
    double first = mm.s.row(0).cwiseAbs().maxCoeff();
    double last = mm.s.row(M - 1).cwiseAbs().maxCoeff();
    if (first > 0.0 && last > 0.0) out.rho = std::pow(last / first, 1.0 / (M - 1));
  }
  out.s = mm.s;
  for (int m = 1; m <= M; ++m) out.s.row(m - 1) /= std::pow(out.rho, m);
  return out;
}

}  // namespace

MomentMatrix build_moment_matrix(const MomentTable& t, int K) {
  const int M = t.schedule.max_m;
  if (K < 1) throw rec_error(ErrorKind::InvalidParameter, "target mode count must be positive");
  if (M < 2 * K + 2)
    throw rec_error(ErrorKind::IncompleteTable, "need at least " + std::to_string(2 * K + 2) +
                                                    " fractional moments for K = " + std::to_string(K) + ", table has " +
                                                    std::to_string(M));
  MomentMatrix mm;
  mm.num_sources = t.num_sources();
  mm.num_nodes = static_cast<int>(t.nodes.size());
  mm.alpha = t.schedule.alpha;
  mm.nodes = t.nodes;
  mm.source_ids = t.source_ids;
  mm.s.resize(M, mm.num_sources * mm.num_nodes);
  for (int i = 0; i < mm.num_sources; ++i)
    for (int m = 1; m <= M; ++m) {
      const int k = 2 * m - 1;
      if (!t.present[i][k - 1])
        throw rec_error(ErrorKind::IncompleteTable,
                        "missing b_" + std::to_string(k) + " for source " + t.source_ids[i]);
      mm.s.block(m - 1, i * mm.num_nodes, 1, mm.num_nodes) = t.values[i].row(k - 1).real();
    }
  return mm;
}

std::vector<double> hankel_singular_values(const MomentMatrix& mm, ScaleStrategy strategy) {
  ScaledMoments sc = scale_moments(mm, strategy);
  Eigen::MatrixXd H0 = sc.s.topRows(mm.num_moments() - 1);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(H0);
  const auto& sv = svd.singularValues();
  return {sv.data(), sv.data() + sv.size()};
}

int select_mode_count(const std::vector<double>& sv, int cap, double gap_ratio) {
  int best = -1;
  double best_ratio = gap_ratio;
  for (size_t i = 0; i + 1 < sv.size(); ++i) {
    double r = sv[i + 1] > 0.0 ? sv[i] / sv[i + 1] : (sv[i] > 0.0 ? INFINITY : 0.0);
    if (r >= best_ratio) {
      best_ratio = r;
      best = static_cast<int>(i) + 1;
    }
  }
  if (best < 0) return cap;
  return std::min(best, cap);
}

RecoveredSpectrum pencil_recover(const MomentMatrix& mm, int K, ScaleStrategy strategy, double max_condition,
                                 double imag_tol) {
  const int M = mm.num_moments();
  if (K < 1 || 2 * K > M - 1)
    throw rec_error(ErrorKind::InvalidParameter, "K must satisfy 1 <= K <= (M - 1) / 2");
  ScaledMoments sc = scale_moments(mm, strategy);
  Eigen::MatrixXd H0 = sc.s.topRows(M - 1);
  Eigen::MatrixXd H1 = sc.s.bottomRows(M - 1);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(H0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() < K) throw rec_error(ErrorKind::InvalidParameter, "fewer columns than requested modes");

  RecoveredSpectrum out;
  out.alpha = mm.alpha;
  out.num_sources = mm.num_sources;
  out.nodes = mm.nodes;
  out.source_ids = mm.source_ids;
  out.scale = sc.rho;
  out.hankel_singular_values.assign(sv.data(), sv.data() + sv.size());
  out.hankel_condition = sv[K - 1] > 0.0 ? sv[0] / sv[K - 1] : INFINITY;
  if (!(out.hankel_condition <= max_condition))
    throw rec_error(ErrorKind::IllConditioning, "Hankel condition " + std::to_string(out.hankel_condition) +
                                                    " exceeds limit; reduce K or the number of moments");

  Eigen::MatrixXd U = svd.matrixU().leftCols(K);
  Eigen::MatrixXd V = svd.matrixV().leftCols(K);
  Eigen::MatrixXd A = U.transpose() * H1 * V * sv.head(K).cwiseInverse().asDiagonal();
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw rec_error(ErrorKind::SpuriousMode, "pencil eigensolver failed");
  std::vector<double> z;
  for (int k = 0; k < K; ++k) {
    std::complex<double> e = es.eigenvalues()[k];
    if (std::abs(e.imag()) > imag_tol * std::abs(e))
      throw rec_error(ErrorKind::SpuriousMode, "complex pencil eigenvalue " + std::to_string(e.real()) + " + " +
                                                   std::to_string(e.imag()) + "i");
    if (!(e.real() > 0.0)) throw rec_error(ErrorKind::SpuriousMode, "nonpositive pencil eigenvalue");
    z.push_back(e.real());
  }
  std::sort(z.begin(), z.end());

  Eigen::MatrixXd Vm(M, K);
  for (int m = 1; m <= M; ++m)
    for (int k = 0; k < K; ++k) Vm(m - 1, k) = std::pow(z[k], m);
  Eigen::MatrixXd C = Vm.colPivHouseholderQr().solve(sc.s);
  double denom = sc.s.norm();
  out.amplitude_residual = denom > 0.0 ? (Vm * C - sc.s).norm() / denom : 0.0;

  for (int k = 0; k < K; ++k) {
    double lam = sc.rho * z[k];
    out.eigenvalues.push_back(lam);
    std::vector<Eigen::VectorXd> per_source;
    double peak = 0.0;
    for (int i = 0; i < mm.num_sources; ++i) {
      Eigen::VectorXd tr = std::pow(lam, mm.alpha) * C.block(k, i * mm.num_nodes, 1, mm.num_nodes).transpose();
      peak = std::max(peak, tr.cwiseAbs().maxCoeff());
      per_source.push_back(tr);
    }
    out.traces.push_back(per_source);
    out.detectable.push_back(peak >= 1e-10);
  }
  for (int k = 1; k < K; ++k)
    if (!(out.eigenvalues[k] > out.eigenvalues[k - 1]))
      throw rec_error(ErrorKind::SpuriousMode, "recovered eigenvalues are not distinct");
  return out;
}

void recover_multiplicities(RecoveredSpectrum& spec, int max_expected, double rel_threshold) {
  if (spec.num_sources < max_expected + 2)
    throw rec_error(ErrorKind::UnderDetermined, "source family of size " + std::to_string(spec.num_sources) +
                                                    " cannot resolve multiplicity " + std::to_string(max_expected));
  spec.multiplicities.clear();
  for (int k = 0; k < spec.size(); ++k) {
    const int no = static_cast<int>(spec.nodes.size());
    Eigen::MatrixXd T(spec.num_sources, no);
    for (int i = 0; i < spec.num_sources; ++i) T.row(i) = spec.traces[k][i].transpose();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(T);
    const auto& sv = svd.singularValues();
    int rank = 0;
    if (sv.size() > 0 && sv[0] > 0.0)
      for (int j = 0; j < sv.size(); ++j)
        if (sv[j] > rel_threshold * sv[0]) ++rank;
    spec.multiplicities.push_back(rank);
  }
}

SpectralData oracle_spectral_data(const SpectralModel& model, const ObservationRegion& r,
                                  const std::vector<Eigen::VectorXd>& sources, int max_blocks) {
  SpectralData d;
  d.nodes = r.observed_idx;
  const int nb = model.num_blocks();
  const int last = max_blocks > 0 ? std::min(nb - 1, max_blocks) : nb - 1;
  std::vector<Eigen::VectorXd> coef;
  for (const auto& f : sources) {
    coef.push_back(model.coefficients(r.extend(f)));
    d.source_mass.push_back(f.dot(r.local_weights));
  }
  for (int k = 1; k <= last; ++k) {
    d.eigenvalues.push_back(model.distinct_eigenvalues[k]);
    d.multiplicities.push_back(model.multiplicities[k]);
    const int s = model.block_start[k], m = model.multiplicities[k];
    std::vector<Eigen::VectorXd> per;
    for (const auto& c : coef) per.push_back(r.restrict(model.basis.middleCols(s, m) * c.segment(s, m)));
    d.traces.push_back(per);
  }
  d.has_zero_mode = true;
  d.volume = model.total_volume;
  return d;
}

SpectralData spectral_data_from_recovered(const RecoveredSpectrum& spec, const ObservationRegion& r,
                                          const std::vector<Eigen::VectorXd>& sources, double volume) {
  if (static_cast<int>(sources.size()) != spec.num_sources)
    throw rec_error(ErrorKind::InvalidParameter, "source family does not match the recovered spectrum");
  SpectralData d;
  d.nodes = spec.nodes;
  d.eigenvalues = spec.eigenvalues;
  d.multiplicities = spec.multiplicities;
  d.traces = spec.traces;
  d.has_zero_mode = volume > 0.0;
  d.volume = volume;
  for (const auto& f : sources) d.source_mass.push_back(f.dot(r.local_weights));
  return d;
}

Eigen::VectorXd resolvent_value(const SpectralData& d, int source, double z) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d.nodes.size());
  for (size_t k = 0; k < d.eigenvalues.size(); ++k) v += d.traces[k][source] / (d.eigenvalues[k] - z);
  return v;
}

ResolventSamples resolvent_from_spectrum(const SpectralData& d, const std::vector<double>& grid, double exclusion,
                                         double detect_tol) {
  if (d.eigenvalues.empty()) throw rec_error(ErrorKind::InsufficientData, "no eigenvalues available");
  const double radius = exclusion * d.eigenvalues.front();
  for (double z : grid)
    for (double lam : d.eigenvalues)
      if (std::abs(z - lam) < radius)
        throw rec_error(ErrorKind::PoleProximity, "grid point " + std::to_string(z) + " lies within the exclusion radius of " +
                                                      std::to_string(lam));
  ResolventSamples out;
  out.z = grid;
  for (int i = 0; i < d.num_sources(); ++i) {
    std::vector<Eigen::VectorXd> row;
    for (double z : grid) row.push_back(resolvent_value(d, i, z));
    out.values.push_back(row);
    std::vector<double> poles;
    for (size_t k = 0; k < d.eigenvalues.size(); ++k)
      if (d.traces[k][i].cwiseAbs().maxCoeff() > detect_tol) poles.push_back(d.eigenvalues[k]);
    out.pole_markers.push_back(poles);
  }
  return out;
}

std::vector<Eigen::VectorXd> residue_sequence(const SpectralData& d, int mode, int source, int last_exponent) {
  if (mode < 0 || mode >= static_cast<int>(d.eigenvalues.size()))
    throw rec_error(ErrorKind::InvalidParameter, "mode index out of range");
  std::vector<Eigen::VectorXd> seq;
  const double lam = d.eigenvalues[mode];
  for (int j = 2; j <= last_exponent; ++j) {
    double z = lam * (1.0 - std::pow(10.0, -j));
    seq.push_back((lam - z) * resolvent_value(d, source, z));
  }
  return seq;
}

Eigen::VectorXd resolvent_power_series(const SpectralModel& model, const ObservationRegion& r,
                                       const Eigen::VectorXd& f, double z, int terms) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(r.size());
  double zp = 1.0;
  for (int m = 1; m <= terms; ++m) {
    sum += zp * zeta_oracle_observed(model, r, f, std::complex<double>(-m, 0.0), 0.0).values.real();
    zp *= z;
  }
  return sum;
}

VolumeEstimate recover_volume_weyl(const std::vector<double>& ev, const std::vector<int>& mult, int dim) {
  if (ev.size() != mult.size()) throw rec_error(ErrorKind::InvalidParameter, "eigenvalue and multiplicity counts differ");
  int total = 0;
  for (int d : mult) total += d;
  if (total < 10) throw rec_error(ErrorKind::InsufficientData, "Weyl fit needs at least 10 recovered modes");
  if (dim < 1) throw rec_error(ErrorKind::InvalidParameter, "dimension must be positive");
  // Counting function at each eigenvalue, midpoint of the jump; lambda_0 counted.
  std::vector<double> count(ev.size());
  double below = 1.0;
  for (size_t k = 0; k < ev.size(); ++k) {
    count[k] = below + 0.5 * mult[k];
    below += mult[k];
  }
  double num = 0.0, den = 0.0;
  const size_t start = ev.size() / 2;
  for (size_t k = start; k < ev.size(); ++k) {
    double s = std::pow(ev[k], 0.5 * dim);
    num += count[k] * s;
    den += s * s;
  }
  VolumeEstimate out;
  out.coefficient = num / den;
  out.modes_used = static_cast<int>(ev.size() - start);
  const double omega = std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
  out.volume = out.coefficient * std::pow(2.0 * std::numbers::pi, dim) / omega;
  return out;
}

AssembledDtn assemble_dtn_from_spectral_data(const SpectralData& d, const ObservationRegion& r, double lambda,
                                             double rank_tol) {
  if (!(lambda > 0.0)) throw rec_error(ErrorKind::InvalidParameter, "lambda must be positive");
  if (d.nodes != r.observed_idx) throw rec_error(ErrorKind::InvalidParameter, "traces must cover the observed nodes");
  const int S = d.num_sources();
  const int ns = static_cast<int>(r.boundary_idx.size());
  AssembledDtn out;
  out.data.lambda = lambda;
  out.data.sigma_idx = r.boundary_idx;
  out.data.dirichlet_map.resize(ns, S);
  out.data.neumann_map.resize(ns, S);
  for (int i = 0; i < S; ++i) {
    Eigen::VectorXd v = resolvent_value(d, i, -lambda);
    if (d.has_zero_mode) v.array() += d.source_mass[i] / (d.volume * lambda);
    for (int s = 0; s < ns; ++s) out.data.dirichlet_map(s, i) = v[r.local_index(r.boundary_idx[s])];
    out.data.neumann_map.col(i) = normal_derivative_observed(r, v, lambda);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(out.data.dirichlet_map, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  out.dirichlet_rank_ratio = (sv.size() > 0 && sv[0] > 0.0) ? sv[sv.size() - 1] / sv[0] : 0.0;
  if (S < ns || sv.size() < ns || !(out.dirichlet_rank_ratio > rank_tol))
    throw rec_error(ErrorKind::DensityFailure, "source traces do not span the boundary values");
  // Lambda D = N in the least-squares sense
  Eigen::MatrixXd Dt = out.data.dirichlet_map.transpose();
  Eigen::MatrixXd Nt = out.data.neumann_map.transpose();
  out.data.dtn = Dt.colPivHouseholderQr().solve(Nt).transpose();
  out.data.nd_residual = (out.data.neumann_map - out.data.dtn * out.data.dirichlet_map).cwiseAbs().maxCoeff();
  return out;
}

void write_spectrum_csv(std::ostream& os, const RecoveredSpectrum& spec) {
  os << "mode,eigenvalue,multiplicity,detectable,source_id,node,trace\n";
  os.precision(17);
  for (int k = 0; k < spec.size(); ++k)
    for (int i = 0; i < spec.num_sources; ++i)
      for (size_t a = 0; a < spec.nodes.size(); ++a) {
        int mult = k < static_cast<int>(spec.multiplicities.size()) ? spec.multiplicities[k] : -1;
        os << k + 1 << ',' << spec.eigenvalues[k] << ',' << mult << ',' << int(spec.detectable[k]) << ','
           << spec.source_ids[i] << ',' << spec.nodes[a] << ',' << spec.traces[k][i][a] << '\n';
      }
}

}  // namespace fracspec
