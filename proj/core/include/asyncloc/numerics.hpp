#pragma once

#include <functional>
#include <random>

#include <Eigen/Core>

namespace asyncloc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Pivots at or below this fraction of the largest diagonal entry are
/// treated as rank deficiency.
inline constexpr double kPivotTolerance = 1e-14;

/// Lower-triangular Cholesky factor L of a symmetric positive definite
/// matrix A = L L^T.
class CholeskyFactor {
public:
  explicit CholeskyFactor(Matrix lower) : lower_(std::move(lower)) {}

  const Matrix& lower() const { return lower_; }
  Eigen::Index dim() const { return lower_.rows(); }

  /// Reconstructs L L^T.
  Matrix reconstruct() const;

private:
  Matrix lower_;
};

/// Factorizes a symmetric positive definite matrix.
/// Throws NotPositiveDefinite when a pivot falls below
/// kPivotTolerance * max(diag(A)), DimensionMismatch if A is not square and
/// Error if A is not symmetric.
CholeskyFactor cholesky_spd(const Matrix& a);

/// Solves A x = b where A = L L^T.
Vector spd_solve(const CholeskyFactor& factor, const Vector& b);

/// Solves A X = B column by column.
Matrix spd_solve(const CholeskyFactor& factor, const Matrix& b);

/// Computes L^{-1} B by forward substitution ("whitening" under A).
Matrix forward_solve(const CholeskyFactor& factor, const Matrix& b);
Vector forward_solve(const CholeskyFactor& factor, const Vector& b);

/// r^T A^{-1} r, computed without forming A^{-1}.
double weighted_sq_norm(const Vector& r, const CholeskyFactor& factor);

/// Draws sigma * L * z with z ~ N(0, I).
Vector sample_correlated_gaussian(const CholeskyFactor& factor, double sigma,
                                  std::mt19937_64& rng);

/// Cholesky factor of D A D where D = diag(A)^{-1/2}. Used for matrices whose
/// diagonal spans many orders of magnitude (mixed meters/seconds states),
/// where the plain pivot test would misreport rank deficiency.
class EquilibratedCholesky {
public:
  explicit EquilibratedCholesky(const Matrix& a);

  Vector solve(const Vector& b) const;
  Matrix inverse() const;

private:
  Vector scale_;  // D
  CholeskyFactor factor_;
};

/// Central-difference Jacobian. A non-positive step selects the per-coordinate
/// default h_j = 1e-6 * (1 + |x_j|).
Matrix finite_diff_jacobian(const std::function<Vector(const Vector&)>& f,
                            const Vector& x, double step = 0.0);

}  // namespace asyncloc
