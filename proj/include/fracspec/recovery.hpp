#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracspec/forward.hpp"
#include "fracspec/model.hpp"
#include "fracspec/probes.hpp"

namespace fracspec {

struct MomentMatrix {
  Eigen::MatrixXd s;  // row m-1 holds s_m = zeta(m - alpha) over (source, node) columns
  int num_sources = 0;
  int num_nodes = 0;
  double alpha = 0.5;
  std::vector<int> nodes;
  std::vector<std::string> source_ids;

  int num_moments() const { return static_cast<int>(s.rows()); }
};

// Uses the fractional points b_{2m-1} = m - alpha, m = 1..max_m.
MomentMatrix build_moment_matrix(const MomentTable& table, int target_modes);

enum class ScaleStrategy { None, Geometric };

struct RecoveredSpectrum {
  double alpha = 0.5;
  int num_sources = 0;
  std::vector<int> nodes;
  std::vector<std::string> source_ids;
  std::vector<double> eigenvalues;
  std::vector<std::vector<Eigen::VectorXd>> traces;  // [mode][source] on nodes
  std::vector<int> multiplicities;                   // filled by recover_multiplicities
  std::vector<char> detectable;

  double hankel_condition = 0.0;
  double amplitude_residual = 0.0;
  double scale = 1.0;
  std::vector<double> hankel_singular_values;

  int size() const { return static_cast<int>(eigenvalues.size()); }
};

// Singular values of H_0 after the chosen scaling.
std::vector<double> hankel_singular_values(const MomentMatrix& mm, ScaleStrategy scale = ScaleStrategy::Geometric);
// Index of the largest singular-value cliff above gap_ratio, capped; cap when there is no cliff.
int select_mode_count(const std::vector<double>& singular_values, int cap, double gap_ratio = 1e6);

RecoveredSpectrum pencil_recover(const MomentMatrix& mm, int K, ScaleStrategy scale = ScaleStrategy::Geometric,
                                 double max_condition = 1e14, double imag_tol = 1e-6);

// Rank of the (source x node) trace matrix per mode.
void recover_multiplicities(RecoveredSpectrum& spec, int max_expected_multiplicity = 2, double rel_threshold = 1e-6);

// Eigenvalues and restricted projections of a source family, from either path.
struct SpectralData {
  std::vector<int> nodes;
  std::vector<double> eigenvalues;                   // k >= 1
  std::vector<int> multiplicities;
  std::vector<std::vector<Eigen::VectorXd>> traces;  // [mode][source]
  bool has_zero_mode = false;
  double volume = 0.0;
  std::vector<double> source_mass;                   // weighted integral of each source over O
  int num_sources() const { return traces.empty() ? static_cast<int>(source_mass.size()) : static_cast<int>(traces[0].size()); }
};

// Ground truth from the eigenblocks; max_blocks limits k (0 = all).
SpectralData oracle_spectral_data(const SpectralModel& model, const ObservationRegion& region,
                                  const std::vector<Eigen::VectorXd>& sources, int max_blocks = 0);
// Zero mode filled from a volume estimate and the locally computed source masses.
SpectralData spectral_data_from_recovered(const RecoveredSpectrum& spec, const ObservationRegion& region,
                                          const std::vector<Eigen::VectorXd>& sources, double volume);

struct ResolventSamples {
  std::vector<double> z;
  std::vector<std::vector<Eigen::VectorXd>> values;  // [source][z]
  std::vector<std::vector<double>> pole_markers;     // [source] eigenvalues with nonzero trace
};

// sum_k (lambda_k - z)^{-1} pi_k f, k >= 1
ResolventSamples resolvent_from_spectrum(const SpectralData& data, const std::vector<double>& z_grid,
                                         double exclusion = 1e-3, double detect_tol = 1e-10);
// Unguarded evaluation, for residue limits.
Eigen::VectorXd resolvent_value(const SpectralData& data, int source, double z);
// (lambda_k - z_j) R_f(z_j) along z_j = lambda_k (1 - 10^{-j}), j = 2..last_exponent.
std::vector<Eigen::VectorXd> residue_sequence(const SpectralData& data, int mode, int source, int last_exponent = 8);
// sum_{m=1}^{terms} z^{m-1} zeta_f(-m) from the oracle.
Eigen::VectorXd resolvent_power_series(const SpectralModel& model, const ObservationRegion& region,
                                       const Eigen::VectorXd& f_observed, double z, int terms = 60);

struct VolumeEstimate {
  double volume = 0.0;
  double coefficient = 0.0;
  int modes_used = 0;
};

VolumeEstimate recover_volume_weyl(const std::vector<double>& eigenvalues, const std::vector<int>& multiplicities,
                                   int dimension_n = 1);

struct AssembledDtn {
  DtnData data;  // dirichlet/neumann maps act on the source family
  double dirichlet_rank_ratio = 0.0;
};

AssembledDtn assemble_dtn_from_spectral_data(const SpectralData& data, const ObservationRegion& region, double lambda,
                                             double rank_tol = 1e-10);

void write_spectrum_csv(std::ostream& os, const RecoveredSpectrum& spec);

}  // namespace fracspec
