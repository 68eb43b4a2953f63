#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "asyncloc/bound.hpp"
#include "asyncloc/errors.hpp"
#include "asyncloc/rng.hpp"
#include "asyncloc/simulate.hpp"

namespace asyncloc {
namespace {

TruthDraw nominal_draw(const Scenario& s, std::uint64_t k = 0) {
  auto rng = make_stream(5, StreamDomain::Trial, k);
  return sample_truth(s, rng);
}

TEST(FisherInfo, NoiseVarianceEntry) {
  Scenario s = nominal_scenario();
  s.sequence = {1, 2, 1};
  const ObservationSet st = observation_structure(s);
  const Matrix j = fisher_info(nominal_draw(s).state, 1.0, st);
  EXPECT_DOUBLE_EQ(j(17, 17), 1.0);
  EXPECT_TRUE(j.col(17).head(17).isZero());
  EXPECT_TRUE(j.row(17).head(17).isZero());
}

TEST(FisherInfo, ThetaBlockScalesWithInverseVariance) {
  const Scenario s = nominal_scenario();
  const ObservationSet st = observation_structure(s);
  const TruthDraw d = nominal_draw(s);
  const Matrix a = fisher_info(d.state, 4e-18, st);
  const Matrix b = fisher_info(d.state, 16e-18, st);
  EXPECT_LE((b.topLeftCorner(17, 17) - 0.25 * a.topLeftCorner(17, 17)).cwiseAbs().maxCoeff(),
            1e-12 * a.cwiseAbs().maxCoeff());
}

TEST(FisherInfo, MatchesHessianOfQuadraticTerm) {
  const Scenario s = nominal_scenario();
  const ObservationSet st = observation_structure(s);
  const TruthDraw d = nominal_draw(s, 3);
  const double sigma2 = 4e-18;
  const Matrix qinv = st.q.inverse();
  const Vector clean = predict(d.state, st.h, st.speed);
  // Expected Hessian of 1/(2 s2) ||y - f||^2_{Q^{-1}} equals the Hessian of
  // the same quadratic evaluated with y = f(truth).
  auto quad = [&](const Vector& theta) {
    const Vector r = clean - predict(StateVector(2, 6, theta), st.h, st.speed);
    return 0.5 * r.dot(qinv * r) / sigma2;
  };
  Vector steps = Vector::Constant(17, 1e-4);
  steps.tail(5).setConstant(1e-4 / st.speed);
  const Matrix hess = testing::numerical_hessian(quad, d.state.values(), steps);
  const Matrix info = fisher_info(d.state, sigma2, st).topLeftCorner(17, 17);
  // compare in meter units for every coordinate
  Vector unit = Vector::Ones(17);
  unit.tail(5).setConstant(1.0 / st.speed);
  const Matrix hs = unit.asDiagonal() * hess * unit.asDiagonal();
  const Matrix is = unit.asDiagonal() * info * unit.asDiagonal();
  EXPECT_LE((hs - is).cwiseAbs().maxCoeff(), 1e-4 * is.cwiseAbs().maxCoeff());
}

TEST(FisherInfo, IsSymmetricPsd) {
  const Scenario s = nominal_scenario();
  const Matrix j = fisher_info(nominal_draw(s).state, 4e-18, observation_structure(s));
  EXPECT_LE((j - j.transpose()).cwiseAbs().maxCoeff(), 1e-12 * j.cwiseAbs().maxCoeff());
}

TEST(PriorInfo, Blocks) {
  const Scenario s = nominal_scenario();
  const Matrix j = prior_info(s, make_prior(s));
  ASSERT_EQ(j.rows(), 18);
  EXPECT_TRUE(j.topLeftCorner(8, 8).isApprox(25.0 * Matrix::Identity(8, 8), 1e-15));
  EXPECT_TRUE(j.block(8, 8, 4, 4).isZero());
  EXPECT_TRUE(j.row(17).isZero());
  EXPECT_TRUE(j.col(17).isZero());
  EXPECT_DOUBLE_EQ(j(12, 12), 1e16);
}

TEST(PriorInfo, OnlyDelayBlockWhenPositionsAreFlat) {
  const Scenario s = nominal_scenario();
  PriorSpec p = make_prior(s);
  p.precision.topLeftCorner(12, 12).setZero();
  const Matrix j = prior_info(s, p);
  EXPECT_TRUE(j.topLeftCorner(12, 12).isZero());
  EXPECT_TRUE(j.block(12, 12, 5, 5).isDiagonal());
}

TEST(Hcrb, SymmetricWithConsistentInverse) {
  const Scenario s = nominal_scenario();
  const BoundResult b = hcrb(s, make_prior(s), 50, 1);
  const Matrix& j = b.information;
  EXPECT_LE((j - j.transpose()).cwiseAbs().maxCoeff(), 1e-12 * j.cwiseAbs().maxCoeff());
  EXPECT_TRUE((b.inverse.diagonal().array() >= 0.0).all());
  // scaled identity check: D^{1/2} J^{-1} J D^{-1/2}
  const Vector d = j.diagonal().cwiseSqrt();
  const Matrix check = d.asDiagonal() * b.inverse * j * d.cwiseInverse().asDiagonal();
  EXPECT_LE((check - Matrix::Identity(18, 18)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(b.mc_samples, 50);
  EXPECT_EQ(b.position_blocks.size(), 6u);
}

TEST(Hcrb, MonteCarloStability) {
  const Scenario s = nominal_scenario();
  const PriorSpec p = make_prior(s);
  const BoundResult a = hcrb(s, p, 1000, 1);
  const BoundResult b = hcrb(s, p, 2000, 2);
  for (int id = 1; id <= 6; ++id) {
    const double ta = a.position_blocks[id - 1].trace();
    const double tb = b.position_blocks[id - 1].trace();
    EXPECT_NEAR(tb / ta, 1.0, 0.01) << "node " << id;
  }
}

TEST(Hcrb, SingularWithoutAnchorPriors) {
  const Scenario s = nominal_scenario();
  PriorSpec p = make_prior(s);
  p.precision.topLeftCorner(12, 12).setZero();
  EXPECT_THROW(hcrb(s, p, 5, 1), SingularInformation);
}

TEST(Rmse, Metric) {
  EXPECT_DOUBLE_EQ(rmse_metric(Matrix::Identity(2, 2), 1), std::sqrt(2.0));
  Matrix c = Matrix::Zero(4, 4);
  c(0, 0) = 4.0;
  EXPECT_DOUBLE_EQ(rmse_metric(c, 2), 1.0);
}

TEST(Ellipse, QuantileMatchesChiSquareInverse) {
  const boost::math::chi_squared chi2(2.0);
  for (double p : {0.5, 0.9, 0.95, 0.99, 0.999}) {
    EXPECT_NEAR(chi2_2dof_quantile(p), boost::math::quantile(chi2, p), 1e-10);
  }
  EXPECT_THROW(chi2_2dof_quantile(1.0), Error);
}

TEST(Ellipse, UnitCovarianceIsCircle) {
  const Ellipse e = error_ellipse(Matrix::Identity(2, 2), 0.99);
  const double r = std::sqrt(boost::math::quantile(boost::math::chi_squared(2.0), 0.99));
  EXPECT_NEAR(e.semi_major, r, 1e-10);
  EXPECT_NEAR(e.semi_minor, r, 1e-10);
  EXPECT_NEAR(r * r, 9.21, 0.001);
}

TEST(Ellipse, DiagonalAxesRatio) {
  Matrix c(2, 2);
  c << 4, 0, 0, 1;
  const Ellipse e = error_ellipse(c);
  EXPECT_NEAR(e.semi_major / e.semi_minor, 2.0, 1e-12);
  EXPECT_NEAR(e.orientation, 0.0, 1e-15);
}

TEST(Ellipse, RotationMovesOrientation) {
  Matrix c(2, 2);
  c << 4, 0, 0, 1;
  for (double phi : {0.1, 0.7, 1.2, -0.9}) {
    Matrix r(2, 2);
    r << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    const Ellipse e = error_ellipse(r * c * r.transpose());
    EXPECT_NEAR(e.orientation, phi, 1e-12);
    EXPECT_NEAR(e.semi_major / e.semi_minor, 2.0, 1e-12);
  }
}

}  // namespace
}  // namespace asyncloc
