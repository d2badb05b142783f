#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "fracspec/model.hpp"

namespace fracspec {

// sum_{k>=1} lambda_k^alpha pi_k u
Eigen::VectorXd fractional_laplacian_apply(const SpectralModel& model, double alpha, const Eigen::VectorXd& u);

// sum_{k>=1} lambda_k^{-alpha} pi_k f. The weighted mean of f must vanish
// relative to its weighted L1 mass within mean_tol.
Eigen::VectorXd solve_fractional(const SpectralModel& model, double alpha, const Eigen::VectorXd& f,
                                 double mean_tol = 1e-12);

// f is a node vector supported in the observed interior; result lives on observed_idx.
Eigen::VectorXd source_to_solution(const SpectralModel& model, const ObservationRegion& region, double alpha,
                                   const Eigen::VectorXd& f);

// Black-box source-to-solution map. Inputs and outputs are observed vectors;
// the model behind it is not reachable through this interface.
class ForwardMap {
 public:
  ForwardMap(const SpectralModel& model, const ObservationRegion& region, double alpha);
  Eigen::VectorXd operator()(const Eigen::VectorXd& f_observed) const;
  double alpha() const { return alpha_; }

 private:
  const SpectralModel* model_;
  const ObservationRegion* region_;
  double alpha_;
};

// (-Delta_g)^m f computed from the observed metric only. f and the result are
// observed vectors. Every intermediate iterate must stay clear of the boundary.
Eigen::VectorXd iterated_laplacian_local(const ObservationRegion& region, const Eigen::VectorXd& f_observed, int m);

struct DtnData {
  double lambda = 0.0;
  std::vector<int> sigma_idx;     // boundary nodes, rows of every map
  std::vector<int> source_idx;    // interior nodes, columns of the source maps
  Eigen::MatrixXd dirichlet_map;  // f -> v|_Sigma
  Eigen::MatrixXd neumann_map;    // f -> d_nu v|_Sigma
  Eigen::MatrixXd dtn;            // h -> d_nu u|_Sigma
  double nd_residual = 0.0;       // max |N - Lambda D|
};

DtnData dtn_direct(const SpectralModel& model, const ObservationRegion& region, double lambda);

std::pair<Eigen::VectorXd, Eigen::VectorXd> source_to_dirichlet_neumann(const SpectralModel& model,
                                                                        const ObservationRegion& region,
                                                                        double lambda, const Eigen::VectorXd& f);

// Normal derivative at every boundary node from an observed vector that
// solves (-Delta + lambda) v = 0 near the boundary. Uses only local data.
Eigen::VectorXd normal_derivative_observed(const ObservationRegion& region, const Eigen::VectorXd& v_observed,
                                           double lambda);

}  // namespace fracspec
