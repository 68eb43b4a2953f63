#pragma once

#include <optional>
#include <vector>

#include "asyncloc/model.hpp"
#include "asyncloc/scenario.hpp"

namespace asyncloc {

/// Gaussian prior in information form. Zero precision blocks encode
/// noninformative priors.
struct PriorSpec {
  Vector mean;       // [mu_1; ...; mu_N; mu_delta * 1]
  Matrix precision;  // diag(P_1^{-1}, ..., P_N^{-1}, sigma_delta^{-2} I)
};

/// Builds the estimator prior from a scenario. Anchor position stds are
/// multiplied by `anchor_std_scale` (prior mismatch studies). Receiver and
/// auxiliary nodes get zero precision; their mean entries hold the truth
/// positions and carry no weight. A zero delay std or anchor std is rejected.
PriorSpec make_prior(const Scenario& scenario, double anchor_std_scale = 1.0);

/// Differentiable observation function y = f(theta) + w. The estimator only
/// sees the model through this interface.
class MeasurementModel {
public:
  virtual ~MeasurementModel() = default;
  virtual Vector predict(const Vector& theta) const = 0;
  /// Jacobian of predict at theta.
  virtual Matrix jacobian(const Vector& theta) const = 0;
};

/// f(theta) = c^{-1} H g(theta), with G = c^{-1} H Gamma(theta).
class RangeDelayModel final : public MeasurementModel {
public:
  explicit RangeDelayModel(const ObservationSet& obs);

  Vector predict(const Vector& theta) const override;
  Matrix jacobian(const Vector& theta) const override;

private:
  Matrix h_;
  double speed_;
  int dim_;
  int nodes_;
  std::vector<int> used_pairs_;
};

struct EstimatorOptions {
  double tolerance = 1e-4;   // outer and inner step-norm threshold
  int max_inner = 100;
  int max_outer = 50;
  /// Scale delay coordinates by c before taking step norms.
  bool unit_balanced_norm = false;
  /// Adds ridge_factor * trace(A) / T to the normal matrix diagonal.
  bool ridge = false;
  double ridge_factor = 1e-10;
  double residual_floor = 1e-30;
  /// Consecutive cost increases tolerated before declaring divergence.
  int divergence_patience = 3;
};

enum class EstimateStatus { Converged, MaxIterations, Diverged };

struct EstimateResult {
  Vector theta_hat;
  double sigma2_hat = 0.0;
  int outer_iters = 0;
  int inner_iters_total = 0;
  bool converged = false;
  EstimateStatus status = EstimateStatus::MaxIterations;
  double final_cost = 0.0;
  std::vector<double> cost_history;  // V at init and after each outer step
  /// Gradient norm of the last linearized cost at zero increment and at the
  /// accepted increment.
  double gradient_norm_initial = 0.0;
  double gradient_norm_final = 0.0;
};

/// Quantities that define the linearized cost around the current estimate.
struct Linearization {
  Vector residual;    // y - f(theta_l)
  Matrix jacobian;    // G_l
  Vector prior_gap;   // mu - theta_l
};

struct IncrementResult {
  Vector increment;
  int iterations = 0;
  bool converged = false;
};

/// ||y - c^{-1} H g||^2_{Q^{-1}} / (M + 2).
double sigma2_hat(const StateVector& state, const ObservationSet& obs);

/// Concentrated MAP cost 0.5 ln ||r||^2_{Q^{-1}} + beta/2 ||mu - theta||^2_{P^{-1}}.
/// The squared residual norm is floored at `residual_floor`.
double cost_V(const StateVector& state, const ObservationSet& obs,
              const PriorSpec& prior, double beta, double residual_floor = 1e-30);

/// Generic form of cost_V for any measurement model.
double cost_V(const MeasurementModel& model, const Vector& y,
              const CholeskyFactor& q_factor, const PriorSpec& prior,
              const Vector& theta, double beta, double residual_floor = 1e-30);

/// Fixed-point solve for the increment minimizing the linearized cost,
/// starting from zero. `norm_weights` (optional) scales coordinates in the
/// convergence test.
IncrementResult fixed_point_increment(const Linearization& lin,
                                      const Matrix& prior_precision, double beta,
                                      const CholeskyFactor& q_factor,
                                      const EstimatorOptions& options = {},
                                      const Vector* norm_weights = nullptr);

/// Gradient of the linearized cost at `increment`.
Vector linearized_gradient(const Linearization& lin, const Matrix& prior_precision,
                           double beta, const CholeskyFactor& q_factor,
                           const Vector& increment, double residual_floor = 1e-30);

/// Iterative MAP estimator: relinearize, solve the increment by fixed-point
/// iteration, update, until the step norm drops below the tolerance.
EstimateResult map_estimate(const MeasurementModel& model, const Vector& y,
                            const Matrix& q, const PriorSpec& prior,
                            const Vector& init, const EstimatorOptions& options = {},
                            const Vector* norm_weights = nullptr);

EstimateResult map_estimate(const ObservationSet& obs, const PriorSpec& prior,
                            const StateVector& init,
                            const EstimatorOptions& options = {});

/// Anchors at their prior means, receiver at the anchor centroid, auxiliary
/// nodes at their configured init or at the centroid plus (1, 1) m rotated by
/// 2 pi k / K for the k-th of K auxiliary nodes, delays at the delay mean.
StateVector default_init(const Scenario& scenario, const PriorSpec& prior);

}  // namespace asyncloc
