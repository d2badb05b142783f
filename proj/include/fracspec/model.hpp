#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace fracspec {

using Profile = std::function<double(double)>;

// Periodic metric coefficient a(x) on a circle of given circumference.
//   flat:    a = scale
//   bump:    a = 1 + amp * exp(kappa * (cos(2 pi (x - center) / L) - 1))
//   fourier: a = c0 + sum_j cos_j cos(2 pi j x / L) + sin_j sin(2 pi j x / L)
struct MetricProfile {
  enum class Kind { Flat, Bump, Fourier };
  Kind kind = Kind::Flat;
  double scale = 1.0;
  double amp = 0.0;
  double kappa = 10.0;
  double center = 0.0;
  std::vector<double> cos_coef;
  std::vector<double> sin_coef;

  Profile bind(double circumference) const;
};

MetricProfile profile_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const MetricProfile& p);

struct SpectralModel {
  int n = 0;
  double circumference = 0.0;
  double h = 0.0;
  int dimension_n = 1;

  Eigen::VectorXd coords;       // chart coordinate x_i = i h
  Eigen::VectorXd metric;       // a(x_i)
  Eigen::VectorXd edge_metric;  // a(x_{i+1/2}), edge i joins i and i+1 (mod n)
  Eigen::VectorXd weights;      // sqrt(a_i) h
  Eigen::VectorXd conductance;  // 1 / (sqrt(a_{i+1/2}) h)
  // Symmetric energy matrix S; the operator -Delta_g is W^{-1} S.
  Eigen::MatrixXd stiffness;

  std::vector<double> distinct_eigenvalues;
  std::vector<int> multiplicities;
  std::vector<Eigen::MatrixXd> eigenblocks;  // columns W-orthonormal

  // Flattened view of the blocks. lambda(j) is the unclustered eigenvalue of column j;
  // inside a block these differ from the block value by less than the cluster tolerance.
  Eigen::MatrixXd basis;
  Eigen::VectorXd lambda;
  std::vector<int> block_of_column;
  std::vector<int> block_start;

  double total_volume = 0.0;
  int trusted_modes = 0;

  int num_blocks() const { return static_cast<int>(distinct_eigenvalues.size()); }
  // -Delta_g u
  Eigen::VectorXd apply_laplacian(const Eigen::VectorXd& u) const;
  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  double mean(const Eigen::VectorXd& u) const;
  // Weighted projection onto eigenblock k.
  Eigen::VectorXd project(int k, const Eigen::VectorXd& u) const;
  // Coefficients of u in the flattened basis.
  Eigen::VectorXd coefficients(const Eigen::VectorXd& u) const;
};

struct ClusterResult {
  std::vector<double> values;
  std::vector<int> multiplicities;
  std::vector<Eigen::MatrixXd> blocks;
};

// Raw vectors are columns, W-orthonormal up to roundoff; weights define the inner product.
ClusterResult cluster_eigenvalues(const Eigen::VectorXd& raw_values, const Eigen::MatrixXd& raw_vectors,
                                  const Eigen::VectorXd& weights, double rel_gap_tol = 1e-6);

SpectralModel build_circle_model(int n_nodes, double circumference, const Profile& metric_profile,
                                 double rel_gap_tol = 1e-6);

struct ObservationRegion {
  struct Edge {
    int a = 0;  // local indices into observed_idx
    int b = 0;
    double conductance = 0.0;
  };

  int n_nodes = 0;
  double h = 0.0;
  double circumference = 0.0;
  std::vector<int> interior_idx;
  std::vector<int> boundary_idx;
  std::vector<int> hidden_idx;
  std::vector<int> observed_idx;  // sorted interior and boundary

  Eigen::VectorXd local_coords;   // chart coordinate of observed nodes
  Eigen::VectorXd local_metric;   // a at observed nodes
  Eigen::VectorXd local_weights;  // quadrature weight at observed nodes
  std::vector<Edge> local_edges;  // stencil edges with both ends observed

  // Per boundary node: +1 when the hidden neighbour is at i+1, -1 when at i-1,
  // 0 when the node has no hidden neighbour. The normal points out of O.
  std::vector<int> normal_orientation;
  // Per boundary node: local index of its interior neighbour, -1 if ambiguous.
  std::vector<int> inward_local;

  int local_index(int global) const;  // -1 when not observed
  bool is_interior(int global) const;
  int size() const { return static_cast<int>(observed_idx.size()); }
  double observed_length() const;  // sum of sqrt(a) h over local edges

  // Restriction of a node vector to the observed nodes.
  Eigen::VectorXd restrict(const Eigen::VectorXd& u) const;
  // Zero extension of an observed vector to all nodes.
  Eigen::VectorXd extend(const Eigen::VectorXd& v) const;

  std::vector<int> local_kind_;  // 0 hidden, 1 interior, 2 boundary
  std::vector<int> local_of_;
};

ObservationRegion make_observation_region(const SpectralModel& model, std::vector<int> interior_idx);

// Ground truth kept away from the recovery path.
struct HiddenTruth {
  Profile hidden_profile;
  double hidden_length = 0.0;
  double observed_length = 0.0;
};

struct TwoArcModel {
  SpectralModel model;
  ObservationRegion region;
  HiddenTruth truth;
};

// The observed arc is [0, fraction * L]; the hidden profile is blended into the
// observed one over 5 nodes on the hidden side of each junction.
TwoArcModel build_two_arc_model(int n_nodes, double observed_arc_fraction, const Profile& observed_profile,
                                const Profile& hidden_profile, double circumference = 2.0 * 3.14159265358979323846,
                                double rel_gap_tol = 1e-6);

struct ModelConfig {
  int n_nodes = 256;
  double circumference = 2.0 * 3.14159265358979323846;
  MetricProfile profile;
  bool has_hidden_profile = false;
  MetricProfile hidden_profile;
  double observed_fraction = 0.5;
};

ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json model_config_to_json(const ModelConfig& c);
TwoArcModel build_from_config(const ModelConfig& c);

void write_model_csv(std::ostream& os, const SpectralModel& model);

}  // namespace fracspec
