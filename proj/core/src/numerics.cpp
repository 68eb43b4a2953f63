#include "asyncloc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "asyncloc/errors.hpp"

namespace asyncloc {

namespace {

constexpr double kSymmetryTolerance = 1e-10;

void require_dim(const CholeskyFactor& factor, Eigen::Index n,
                 const char* what) {
  if (n != factor.dim()) {
    std::ostringstream msg;
    msg << what << ": factor is " << factor.dim() << "x" << factor.dim()
        << " but operand has " << n << " rows";
    throw DimensionMismatch(msg.str());
  }
}

Vector diagonal_scaling(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("equilibration requires a square matrix");
  }
  Vector scale(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double d = a(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) {
      std::ostringstream msg;
      msg << "non-positive diagonal entry " << d << " at index " << i;
      throw NotPositiveDefinite(msg.str());
    }
    scale(i) = 1.0 / std::sqrt(d);
  }
  return scale;
}

}  // namespace

Matrix CholeskyFactor::reconstruct() const {
  return lower_ * lower_.transpose();
}

CholeskyFactor cholesky_spd(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DimensionMismatch("cholesky_spd: matrix must be square and non-empty");
  }
  if (!a.allFinite()) {
    throw NotPositiveDefinite("cholesky_spd: matrix has non-finite entries");
  }
  const Eigen::Index n = a.rows();
  const double amax = a.cwiseAbs().maxCoeff();
  if ((a - a.transpose()).cwiseAbs().maxCoeff() >
      kSymmetryTolerance * std::max(amax, 1e-300)) {
    throw Error("cholesky_spd: matrix is not symmetric");
  }
  const double diag_max = a.diagonal().maxCoeff();
  const double pivot_floor = kPivotTolerance * std::max(diag_max, 0.0);

  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > pivot_floor)) {
      std::ostringstream msg;
      msg << "cholesky_spd: pivot " << pivot << " at index " << j
          << " is not above " << pivot_floor;
      throw NotPositiveDefinite(msg.str());
    }
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return CholeskyFactor(std::move(l));
}

Matrix forward_solve(const CholeskyFactor& factor, const Matrix& b) {
  require_dim(factor, b.rows(), "forward_solve");
  return factor.lower().triangularView<Eigen::Lower>().solve(b);
}

Vector forward_solve(const CholeskyFactor& factor, const Vector& b) {
  require_dim(factor, b.size(), "forward_solve");
  return factor.lower().triangularView<Eigen::Lower>().solve(b);
}

Vector spd_solve(const CholeskyFactor& factor, const Vector& b) {
  const Vector z = forward_solve(factor, b);
  return factor.lower().transpose().triangularView<Eigen::Upper>().solve(z);
}

Matrix spd_solve(const CholeskyFactor& factor, const Matrix& b) {
  const Matrix z = forward_solve(factor, b);
  return factor.lower().transpose().triangularView<Eigen::Upper>().solve(z);
}

double weighted_sq_norm(const Vector& r, const CholeskyFactor& factor) {
  // r^T (L L^T)^{-1} r = |L^{-1} r|^2
  return forward_solve(factor, r).squaredNorm();
}

Vector sample_correlated_gaussian(const CholeskyFactor& factor, double sigma,
                                  std::mt19937_64& rng) {
  if (sigma < 0.0) throw Error("sample_correlated_gaussian: sigma < 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(factor.dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return sigma * (factor.lower() * z);
}

EquilibratedCholesky::EquilibratedCholesky(const Matrix& a)
    : scale_(diagonal_scaling(a)),
      factor_(cholesky_spd(scale_.asDiagonal() * a * scale_.asDiagonal())) {}

Vector EquilibratedCholesky::solve(const Vector& b) const {
  // A = D^{-1} S D^{-1}  =>  A^{-1} b = D S^{-1} D b
  return scale_.asDiagonal() *
         spd_solve(factor_, Vector(scale_.asDiagonal() * b));
}

Matrix EquilibratedCholesky::inverse() const {
  const Eigen::Index n = scale_.size();
  Matrix inv = scale_.asDiagonal() *
               spd_solve(factor_, Matrix(Matrix::Identity(n, n))) *
               scale_.asDiagonal();
  return 0.5 * (inv + inv.transpose());
}

Matrix finite_diff_jacobian(const std::function<Vector(const Vector&)>& f,
                            const Vector& x, double step) {
  const Vector f0 = f(x);
  Matrix jac(f0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = step > 0.0 ? step : 1e-6 * (1.0 + std::abs(x(j)));
    xp(j) = x(j) + h;
    const Vector fp = f(xp);
    xp(j) = x(j) - h;
    const Vector fm = f(xp);
    xp(j) = x(j);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

}  // namespace asyncloc
