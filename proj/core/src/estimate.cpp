#include "asyncloc/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "asyncloc/errors.hpp"

namespace asyncloc {

namespace {

double step_norm(const Vector& step, const Vector* weights) {
  if (weights == nullptr) return step.norm();
  return step.cwiseProduct(*weights).norm();
}

// R with R^T R = P^{-1}, computed on the unit-diagonal rescaling of P^{-1}
// so eigenvalues of very different magnitude come out accurately.
Matrix prior_root(const Matrix& precision) {
  const Eigen::Index t = precision.rows();
  Vector d = precision.diagonal().cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index i = 0; i < t; ++i) {
    if (d(i) == 0.0) d(i) = 1.0;
  }
  const Vector dinv = d.cwiseInverse();
  const Matrix scaled = dinv.asDiagonal() * precision * dinv.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Matrix> es(scaled);
  const double cutoff = kPivotTolerance * std::max(1.0, es.eigenvalues().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < t; ++i) {
    if (es.eigenvalues()(i) > cutoff) keep.push_back(i);
  }
  Matrix root(static_cast<Eigen::Index>(keep.size()), t);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const Eigen::Index i = keep[r];
    root.row(static_cast<Eigen::Index>(r)) =
        std::sqrt(es.eigenvalues()(i)) * es.eigenvectors().col(i).transpose() *
        d.asDiagonal();
  }
  return root;
}

// Least-squares form of A x = b: minimizes alpha ||z - W x||^2 +
// beta ||R (x - gap)||^2 (+ ridge ||x||^2) by column-pivoted QR.
Vector stacked_solve(const Matrix& w, const Vector& z, double alpha,
                     const Matrix& root, const Vector& gap, double beta,
                     double ridge) {
  const Eigen::Index t = w.cols();
  const Eigen::Index rows = w.rows() + root.rows() + (ridge > 0.0 ? t : 0);
  Matrix a = Matrix::Zero(rows, t);
  Vector b = Vector::Zero(rows);
  a.topRows(w.rows()) = std::sqrt(alpha) * w;
  b.head(w.rows()) = std::sqrt(alpha) * z;
  a.middleRows(w.rows(), root.rows()) = std::sqrt(beta) * root;
  b.segment(w.rows(), root.rows()) = std::sqrt(beta) * (root * gap);
  if (ridge > 0.0) a.bottomRows(t) = std::sqrt(ridge) * Matrix::Identity(t, t);

  Vector scale = a.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < t; ++j) {
    if (scale(j) == 0.0) throw SingularNormalMatrix("normal matrix has an empty column");
    scale(j) = 1.0 / scale(j);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a * scale.asDiagonal());
  qr.setThreshold(1e-10);
  if (qr.rank() < t) {
    throw SingularNormalMatrix("normal matrix is singular (rank " +
                               std::to_string(qr.rank()) + " of " +
                               std::to_string(t) + ")");
  }
  return scale.cwiseProduct(qr.solve(b));
}

Vector delay_balanced_weights(const ObservationSet& obs) {
  Vector w = Vector::Ones(StateVector::length(obs.dim, obs.nodes));
  w.tail(obs.nodes - 1).setConstant(obs.speed);
  return w;
}

}  // namespace

PriorSpec make_prior(const Scenario& scenario, double anchor_std_scale) {
  const int n = scenario.node_count();
  const int d = scenario.dim;
  StateVector mean(d, n);
  const Eigen::Index t = mean.size();
  Matrix precision = Matrix::Zero(t, t);
  for (const NodeSpec& node : scenario.nodes) {
    mean.position(node.id) = node.position;
    if (node.role != NodeRole::Anchor) continue;
    const double std = node.prior_std * anchor_std_scale;
    if (!(std > 0.0)) {
      throw ConfigError("make_prior: anchor " + std::to_string(node.id) +
                        " needs a positive prior std");
    }
    const Eigen::Index off = mean.position_offset(node.id);
    precision.block(off, off, d, d) = Matrix::Identity(d, d) / (std * std);
  }
  if (!(scenario.delay_std > 0.0)) {
    throw ConfigError("make_prior: delay std must be positive");
  }
  mean.delays().setConstant(scenario.delay_mean);
  const Eigen::Index doff = mean.delay_offset(1);
  precision.block(doff, doff, n - 1, n - 1) =
      Matrix::Identity(n - 1, n - 1) / (scenario.delay_std * scenario.delay_std);
  return PriorSpec{mean.values(), std::move(precision)};
}

RangeDelayModel::RangeDelayModel(const ObservationSet& obs)
    : h_(obs.h),
      speed_(obs.speed),
      dim_(obs.dim),
      nodes_(obs.nodes),
      used_pairs_(referenced_pairs(obs.sequence, obs.nodes)) {}

Vector RangeDelayModel::predict(const Vector& theta) const {
  return asyncloc::predict(StateVector(dim_, nodes_, theta), h_, speed_);
}

Matrix RangeDelayModel::jacobian(const Vector& theta) const {
  return h_ * jacobian_gamma(StateVector(dim_, nodes_, theta), used_pairs_) /
         speed_;
}

double sigma2_hat(const StateVector& state, const ObservationSet& obs) {
  const Vector r = obs.y - predict(state, obs.h, obs.speed);
  return weighted_sq_norm(r, cholesky_spd(obs.q)) /
         static_cast<double>(obs.size() + 2);
}

double cost_V(const MeasurementModel& model, const Vector& y,
              const CholeskyFactor& q_factor, const PriorSpec& prior,
              const Vector& theta, double beta, double residual_floor) {
  const double r2 = weighted_sq_norm(y - model.predict(theta), q_factor);
  const Vector gap = prior.mean - theta;
  return 0.5 * std::log(std::max(r2, residual_floor)) +
         0.5 * beta * gap.dot(prior.precision * gap);
}

double cost_V(const StateVector& state, const ObservationSet& obs,
              const PriorSpec& prior, double beta, double residual_floor) {
  return cost_V(RangeDelayModel(obs), obs.y, cholesky_spd(obs.q), prior,
                state.values(), beta, residual_floor);
}

Vector linearized_gradient(const Linearization& lin, const Matrix& prior_precision,
                           double beta, const CholeskyFactor& q_factor,
                           const Vector& increment, double residual_floor) {
  const Matrix w = forward_solve(q_factor, lin.jacobian);
  const Vector z = forward_solve(q_factor, lin.residual);
  const Vector r = w * increment - z;
  const double alpha = 1.0 / std::max(r.squaredNorm(), residual_floor);
  return alpha * (w.transpose() * r) +
         beta * (prior_precision * (increment - lin.prior_gap));
}

IncrementResult fixed_point_increment(const Linearization& lin,
                                      const Matrix& prior_precision, double beta,
                                      const CholeskyFactor& q_factor,
                                      const EstimatorOptions& options,
                                      const Vector* norm_weights) {
  const Eigen::Index t = lin.jacobian.cols();
  if (prior_precision.rows() != t || prior_precision.cols() != t ||
      lin.prior_gap.size() != t) {
    throw DimensionMismatch("fixed_point_increment: prior does not match state");
  }
  // Whitened quantities: G^T Q^{-1} G = W^T W, G^T Q^{-1} y = W^T z.
  const Matrix w = forward_solve(q_factor, lin.jacobian);
  const Vector z = forward_solve(q_factor, lin.residual);
  const Matrix normal = w.transpose() * w;
  const Vector projected = w.transpose() * z;
  const Matrix prior_term = beta * prior_precision;
  const Vector prior_rhs = prior_term * lin.prior_gap;

  std::optional<Matrix> root;  // built on first fallback

  IncrementResult out;
  out.increment = Vector::Zero(t);
  for (int it = 0; it < options.max_inner; ++it) {
    const double r2 = (z - w * out.increment).squaredNorm();
    const double alpha = 1.0 / std::max(r2, options.residual_floor);
    Matrix a = alpha * normal + prior_term;
    const double ridge =
        options.ridge ? options.ridge_factor * a.trace() / static_cast<double>(t) : 0.0;
    a.diagonal().array() += ridge;
    const Vector b = alpha * projected + prior_rhs;
    Vector next;
    try {
      next = EquilibratedCholesky(a).solve(b);
    } catch (const NotPositiveDefinite&) {
      // near-perfect fits push alpha toward 1 / residual_floor
      if (!root) root = prior_root(prior_precision);
      next = stacked_solve(w, z, alpha, *root, lin.prior_gap, beta, ridge);
    }
    if (!next.allFinite()) {
      throw NonFiniteIterate("fixed-point increment left the finite range");
    }
    const double step = step_norm(next - out.increment, norm_weights);
    out.increment = std::move(next);
    out.iterations = it + 1;
    if (step < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

EstimateResult map_estimate(const MeasurementModel& model, const Vector& y,
                            const Matrix& q, const PriorSpec& prior,
                            const Vector& init, const EstimatorOptions& options,
                            const Vector* norm_weights) {
  const Eigen::Index t = init.size();
  if (prior.mean.size() != t || prior.precision.rows() != t ||
      prior.precision.cols() != t) {
    throw DimensionMismatch("map_estimate: prior does not match initial state");
  }
  if (q.rows() != y.size()) {
    throw DimensionMismatch("map_estimate: Q does not match observations");
  }
  const CholeskyFactor qf = cholesky_spd(q);
  const double beta = 1.0 / static_cast<double>(y.size() + 2);

  EstimateResult result;
  Vector theta = init;
  double cost = cost_V(model, y, qf, prior, theta, beta, options.residual_floor);
  result.cost_history.push_back(cost);
  int increases = 0;

  for (int outer = 0; outer < options.max_outer; ++outer) {
    Linearization lin{y - model.predict(theta), model.jacobian(theta),
                      prior.mean - theta};
    const IncrementResult inc =
        fixed_point_increment(lin, prior.precision, beta, qf, options, norm_weights);
    result.inner_iters_total += inc.iterations;
    result.outer_iters = outer + 1;
    result.gradient_norm_initial =
        linearized_gradient(lin, prior.precision, beta, qf, Vector::Zero(t),
                            options.residual_floor)
            .norm();
    result.gradient_norm_final =
        linearized_gradient(lin, prior.precision, beta, qf, inc.increment,
                            options.residual_floor)
            .norm();

    theta += inc.increment;
    if (!theta.allFinite()) {
      throw NonFiniteIterate("map_estimate: estimate left the finite range");
    }
    const double next_cost =
        cost_V(model, y, qf, prior, theta, beta, options.residual_floor);
    result.cost_history.push_back(next_cost);
    if (next_cost > cost + 1e-12 * std::max(1.0, std::abs(cost))) {
      if (++increases >= options.divergence_patience) {
        result.status = EstimateStatus::Diverged;
        cost = next_cost;
        break;
      }
    } else {
      increases = 0;
    }
    cost = next_cost;

    if (step_norm(inc.increment, norm_weights) < options.tolerance) {
      result.converged = true;
      result.status = EstimateStatus::Converged;
      break;
    }
  }

  result.theta_hat = theta;
  result.final_cost = cost;
  result.sigma2_hat = weighted_sq_norm(y - model.predict(theta), qf) /
                      static_cast<double>(y.size() + 2);
  return result;
}

EstimateResult map_estimate(const ObservationSet& obs, const PriorSpec& prior,
                            const StateVector& init,
                            const EstimatorOptions& options) {
  const RangeDelayModel model(obs);
  if (options.unit_balanced_norm) {
    const Vector weights = delay_balanced_weights(obs);
    return map_estimate(model, obs.y, obs.q, prior, init.values(), options, &weights);
  }
  return map_estimate(model, obs.y, obs.q, prior, init.values(), options);
}

StateVector default_init(const Scenario& scenario, const PriorSpec& prior) {
  const int n = scenario.node_count();
  const int d = scenario.dim;
  const StateVector mean(d, n, prior.mean);
  StateVector init = mean;

  const std::vector<int> anchors = scenario.anchor_ids();
  if (anchors.empty()) throw ConfigError("default_init: no anchors");
  Vector centroid = Vector::Zero(d);
  for (int id : anchors) centroid += mean.position(id);
  centroid /= static_cast<double>(anchors.size());
  init.position(scenario.receiver_id()) = centroid;

  std::vector<Vector> taken;
  for (int id : anchors) taken.push_back(mean.position(id));
  taken.push_back(centroid);

  const std::vector<int> aux = scenario.auxiliary_ids();
  for (std::size_t k = 0; k < aux.size(); ++k) {
    const NodeSpec& node = scenario.node(aux[k]);
    Vector u(d);
    if (node.init) {
      u = *node.init;
    } else {
      const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(aux.size());
      Vector offset = Vector::Zero(d);
      offset(0) = std::cos(phi) - std::sin(phi);
      offset(1) = std::sin(phi) + std::cos(phi);
      double radius = 1.0;
      auto collides = [&](const Vector& p) {
        return std::any_of(taken.begin(), taken.end(), [&](const Vector& q) {
          return (p - q).norm() < 1e-6;
        });
      };
      u = centroid + offset;
      while (collides(u)) {
        radius *= 1.5;
        u = centroid + radius * offset;
      }
    }
    init.position(aux[k]) = u;
    taken.push_back(u);
  }
  return init;
}

}  // namespace asyncloc
