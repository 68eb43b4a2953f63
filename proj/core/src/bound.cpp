#include "asyncloc/bound.hpp"

#include <algorithm>
#include <cmath>

#include "asyncloc/errors.hpp"
#include "asyncloc/rng.hpp"
#include "asyncloc/simulate.hpp"

namespace asyncloc {

double BoundResult::position_rmse(const std::vector<int>& ids) const {
  double trace = 0.0;
  for (int id : ids) trace += position_blocks.at(id - 1).trace();
  return std::sqrt(trace) / static_cast<double>(ids.size());
}

double BoundResult::delay_rmse() const {
  return rmse_metric(delay_block, static_cast<int>(delay_block.rows()));
}

Matrix fisher_info(const StateVector& state, double sigma2,
                   const ObservationSet& structure) {
  if (!(sigma2 > 0.0)) throw Error("fisher_info: sigma^2 must be positive");
  const Eigen::Index t = state.size();
  const Matrix gamma =
      jacobian_gamma(state, referenced_pairs(structure.sequence, structure.nodes));
  const CholeskyFactor qf = cholesky_spd(structure.q);
  const Matrix w = forward_solve(qf, Matrix(structure.h * gamma));
  const double m = static_cast<double>(structure.h.rows());

  Matrix info = Matrix::Zero(t + 1, t + 1);
  const double scale = 1.0 / (structure.speed * structure.speed * sigma2);
  info.topLeftCorner(t, t) = scale * (w.transpose() * w);
  info(t, t) = m / (2.0 * sigma2 * sigma2);
  return info;
}

Matrix prior_info(const Scenario& scenario, const PriorSpec& prior) {
  const Eigen::Index t = StateVector::length(scenario.dim, scenario.node_count());
  if (prior.precision.rows() != t || prior.precision.cols() != t) {
    throw DimensionMismatch("prior_info: prior does not match scenario");
  }
  Matrix info = Matrix::Zero(t + 1, t + 1);
  info.topLeftCorner(t, t) = prior.precision;
  return info;
}

BoundResult invert_information(const Matrix& information, int dim, int nodes,
                               int mc_samples) {
  BoundResult out;
  out.information = 0.5 * (information + information.transpose());
  out.mc_samples = mc_samples;
  try {
    out.inverse = EquilibratedCholesky(out.information).inverse();
  } catch (const NotPositiveDefinite& e) {
    throw SingularInformation(std::string("hybrid information matrix is singular: ") +
                              e.what());
  }
  const StateVector layout(dim, nodes);
  for (int id = 1; id <= nodes; ++id) {
    const Eigen::Index off = layout.position_offset(id);
    out.position_blocks.push_back(out.inverse.block(off, off, dim, dim));
  }
  const Eigen::Index doff = layout.delay_offset(1);
  out.delay_block = out.inverse.block(doff, doff, nodes - 1, nodes - 1);
  const Eigen::Index t = layout.size();
  out.sigma2_var_bound = out.inverse(t, t);
  return out;
}

BoundResult hcrb(const Scenario& scenario, const PriorSpec& prior, int mc_samples,
                 std::uint64_t seed) {
  if (mc_samples < 1) throw Error("hcrb: mc_samples must be >= 1");
  const ObservationSet structure = observation_structure(scenario);
  const double sigma2 = scenario.noise_std * scenario.noise_std;
  const Eigen::Index t = StateVector::length(scenario.dim, scenario.node_count());

  Matrix expected = Matrix::Zero(t + 1, t + 1);
  for (int k = 0; k < mc_samples; ++k) {
    auto rng = make_stream(seed, StreamDomain::Bound, static_cast<std::uint64_t>(k));
    const TruthDraw draw = sample_truth(scenario, rng);
    expected += fisher_info(draw.state, sigma2, structure);
  }
  expected /= static_cast<double>(mc_samples);
  return invert_information(expected + prior_info(scenario, prior), scenario.dim,
                            scenario.node_count(), mc_samples);
}

double rmse_metric(const Matrix& mse, int count) {
  if (mse.rows() != mse.cols()) throw DimensionMismatch("rmse_metric: not square");
  return std::sqrt(std::max(mse.trace(), 0.0)) / static_cast<double>(count);
}

double chi2_2dof_quantile(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error("chi2_2dof_quantile: confidence must lie in (0, 1)");
  }
  return -2.0 * std::log1p(-confidence);
}

Ellipse error_ellipse(const Matrix& cov, double confidence) {
  if (cov.rows() != 2 || cov.cols() != 2) {
    throw DimensionMismatch("error_ellipse: covariance must be 2x2");
  }
  const double a = cov(0, 0);
  const double b = 0.5 * (cov(0, 1) + cov(1, 0));
  const double c = cov(1, 1);
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), b);
  const double l1 = mean + radius;
  const double l2 = std::max(mean - radius, 0.0);
  const double k = chi2_2dof_quantile(confidence);
  Ellipse e;
  e.semi_major = std::sqrt(k * l1);
  e.semi_minor = std::sqrt(k * l2);
  e.orientation = 0.5 * std::atan2(2.0 * b, a - c);
  return e;
}

}  // namespace asyncloc
