#pragma once

#include <cstdint>
#include <vector>

#include "asyncloc/estimate.hpp"
#include "asyncloc/model.hpp"
#include "asyncloc/scenario.hpp"

namespace asyncloc {

/// Hybrid information matrix over eta = [theta; delta; sigma^2] and the
/// blocks of its inverse.
struct BoundResult {
  Matrix information;  // (T+1) x (T+1)
  Matrix inverse;
  std::vector<Matrix> position_blocks;  // index id-1, d x d
  Matrix delay_block;                   // (N-1) x (N-1)
  double sigma2_var_bound = 0.0;
  int mc_samples = 0;

  /// (1/|ids|) sqrt(trace of the joint position bound over `ids`).
  double position_rmse(const std::vector<int>& ids) const;
  /// (1/(N-1)) sqrt(trace of the delay bound).
  double delay_rmse() const;
};

/// Fisher information of one realization: the theta block is
/// c^{-2}/sigma^2 Gamma^T H^T Q^{-1} H Gamma, the sigma^2 entry M / (2 sigma^4),
/// cross terms zero.
Matrix fisher_info(const StateVector& state, double sigma2,
                   const ObservationSet& structure);

/// Prior information in eta order: the estimator-state precision padded
/// with a zero row and column for sigma^2.
Matrix prior_info(const Scenario& scenario, const PriorSpec& prior);

/// Averages fisher_info over `mc_samples` draws of the random parameters
/// (anchor positions and delays, spread taken from `scenario`), adds
/// prior_info(prior), and inverts. Throws SingularInformation.
BoundResult hcrb(const Scenario& scenario, const PriorSpec& prior, int mc_samples,
                 std::uint64_t seed);

/// Inverts an information matrix and extracts per-node blocks.
BoundResult invert_information(const Matrix& information, int dim, int nodes,
                               int mc_samples);

/// sqrt(trace(C)) / count.
double rmse_metric(const Matrix& mse, int count);

/// Chi-square (2 dof) quantile: -2 ln(1 - confidence).
double chi2_2dof_quantile(double confidence);

struct Ellipse {
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double orientation = 0.0;  // radians, angle of the major axis from +x
};

/// Confidence ellipse of a zero-mean Gaussian with 2x2 covariance `cov`.
Ellipse error_ellipse(const Matrix& cov, double confidence = 0.99);

}  // namespace asyncloc
