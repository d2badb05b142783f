#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracspec/errors.hpp"
#include "fracspec/forward.hpp"
#include "fracspec/model.hpp"

namespace fracspec {

// Truncated Taylor series: c[k] is the k-th Taylor coefficient.
constexpr int kJetOrder = 12;
struct Jet {
  std::array<double, kJetOrder + 1> c{};
  static Jet variable(double t);
  static Jet constant(double v);
  double derivative(int k) const;  // k! c[k]
};
Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator*(double s, const Jet& a);
Jet jet_exp(const Jet& a);
Jet jet_log(const Jet& a);

struct BumpSamples {
  double gevrey_index = 1.5;
  Eigen::VectorXd points;
  Eigen::MatrixXd derivatives;  // row k = k-th derivative at each point, k = 0..12
};

// chi_0(t) = E(1 - t^2) / (E(1 - t^2) + E(t^2 - 1/4)), E(s) = exp(-s^{-1/(N'-1)}) for s > 0.
double chi0(double gevrey_index, double t);
BumpSamples gevrey_bump(double gevrey_index, const Eigen::VectorXd& points);
Eigen::VectorXd chebyshev_lobatto(int count);

struct GrowthFit {
  double log_c = 0.0;     // per-order coefficient
  double exponent = 0.0;  // coefficient of log(k!) or log((2m)!)
  double intercept = 0.0;
  double residual = 0.0;  // max abs deviation in log scale
  std::vector<double> norms;
};

// Fits log sup|chi_0^{(k)}| against k log c + s log(k!) + const over k = 1..max_order.
GrowthFit bump_derivative_growth(double gevrey_index, int max_order = 12, int grid_points = 8001);

// Integral of chi_0 over [-1, 1]; the mollifier mass on a flat arc.
double chi0_mass(double gevrey_index);

struct MollifierSpec {
  int center = 0;  // global node index in the observed interior
  double radius = 0.5;
  double gevrey_index = 1.5;
};

// Distance from the centre to the nearest non-interior observed node.
double support_radius_limit(const ObservationRegion& region, int center);
// Observed vector delta^{-1} chi_0(|x - q| / delta).
Eigen::VectorXd mollifier_source(const ObservationRegion& region, const MollifierSpec& spec);

struct MomentSchedule {
  double alpha = 0.5;
  int max_m = 8;

  MomentSchedule() = default;
  MomentSchedule(double alpha, int max_m);
  int size() const { return 2 * max_m; }
  // k = 1..2 max_m; b_{2m-1} = m - alpha, b_{2m} = m
  double b(int k) const;
  bool is_fractional(int k) const { return k % 2 == 1; }
  std::vector<double> exponents() const;
  double gap() const;
};

struct ZetaValue {
  std::complex<double> value;
  int blocks_used = 0;
  double tail_bound = 0.0;
  bool truncation_warning = false;
};

struct ZetaVector {
  Eigen::VectorXcd values;  // on observed_idx
  int blocks_used = 0;
  double tail_bound = 0.0;
  bool truncation_warning = false;
};

// kappa(z) = ceil(Re z) + n + 1 for Re z >= 0, n + 1 otherwise.
int zeta_truncation_order(std::complex<double> z, int dimension_n);

// Partial sums of sum_{k>=1} lambda_k^z (pi_k f)(x), stopped once the tail bound
// drops below tail_tol. max_blocks limits the retained distinct modes (0 = all).
ZetaVector zeta_oracle_observed(const SpectralModel& model, const ObservationRegion& region,
                                const Eigen::VectorXd& f_observed, std::complex<double> z, double tail_tol = 1e-14,
                                int max_blocks = 0);
ZetaValue zeta_oracle(const SpectralModel& model, const ObservationRegion& region, const Eigen::VectorXd& f_observed,
                      std::complex<double> z, int node, double tail_tol = 1e-14, int max_blocks = 0);

// Measurement path: local iterated Laplacians and the black-box map only.
Eigen::VectorXd zeta_measured(const ObservationRegion& region, const ForwardMap& forward, const MomentSchedule& schedule,
                              const Eigen::VectorXd& f_observed, int k);

enum class Provenance { Oracle, Measured };

struct MomentTable {
  MomentSchedule schedule;
  std::vector<std::string> source_ids;
  std::vector<int> nodes;                      // observed node indices, columns of each value block
  std::vector<Eigen::MatrixXcd> values;        // per source: row k-1 is zeta at b_k
  std::vector<std::vector<Provenance>> provenance;  // per source, per k
  std::vector<std::vector<char>> present;           // per source, per k

  int num_sources() const { return static_cast<int>(values.size()); }
};

MomentTable moment_table_measured(const ObservationRegion& region, const ForwardMap& forward,
                                  const MomentSchedule& schedule, const std::vector<Eigen::VectorXd>& sources,
                                  const std::vector<std::string>& ids);
MomentTable moment_table_oracle(const SpectralModel& model, const ObservationRegion& region,
                                const MomentSchedule& schedule, const std::vector<Eigen::VectorXd>& sources,
                                const std::vector<std::string>& ids, double tail_tol = 1e-14);

void write_moment_csv(std::ostream& os, const MomentTable& table);

class GrowthRangeError : public Error {
 public:
  GrowthRangeError(const std::string& what, std::vector<double> partial)
      : Error(ErrorKind::Range, "probes", what), partial_norms(std::move(partial)) {}
  std::vector<double> partial_norms;
};

// Fits log ||(-Delta)^m F||_inf against m log C + s log((2m)!) + const over m = 1..max_m.
GrowthFit growth_audit(const ObservationRegion& region, const MollifierSpec& spec, int max_m);

}  // namespace fracspec
