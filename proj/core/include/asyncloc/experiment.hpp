#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asyncloc/bound.hpp"
#include "asyncloc/estimate.hpp"
#include "asyncloc/scenario.hpp"

namespace asyncloc {

enum class ExperimentKind {
  Ellipses,
  RmseVsSigma,
  RmseVsSigmaDelta,
  DelayRmse,
  MultiAuxiliary,
  ConvergenceHist,
  PriorMismatch,
};

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(const std::string& name);
const std::vector<std::string>& kind_names();

struct ExperimentSpec {
  std::string scenario_path;
  Scenario scenario;
  ExperimentKind kind = ExperimentKind::Ellipses;
  /// Timing noise std values (s) for sweep kinds; empty selects the defaults.
  std::vector<double> sweep;
  /// Anchor prior stds (m) for rmse_vs_sigma, delay prior stds (s) for
  /// rmse_vs_sigma_delta and delay_rmse; empty selects the defaults.
  std::vector<double> prior_values;
  int trials = 1000;
  int bound_samples = 1000;
  std::uint64_t seed = 1;
  std::string out_dir;  // empty: no files written
  EstimatorOptions estimator;
  bool strict_collision = false;
  double mismatch_factor = 10.0;
  int aux_count = 10;
  unsigned threads = 0;  // 0: hardware concurrency
  double failure_threshold = 0.1;

  /// Throws ConfigError.
  void validate() const;
};

/// Per-trial estimator statistics for one scenario configuration.
struct MonteCarloOutcome {
  int trials = 0;
  int completed = 0;   // estimator returned a result
  int converged = 0;
  int collisions = 0;  // draws violating the collision condition
  Matrix mse;          // mean (estimate - truth)(estimate - truth)^T
  Vector mean_error;
  Vector mean_truth;
  std::vector<int> outer_iters;   // -1 when the estimator threw
  std::vector<double> sigma_hat;  // sqrt(sigma2_hat), NaN on failure
  std::vector<std::string> errors;

  double mean_outer_iters() const;
  double convergence_rate() const;
  int failures() const { return trials - converged; }
  double position_rmse(const std::vector<int>& ids, int dim) const;
  double delay_rmse(int dim, int nodes) const;
};

/// Runs `trials` independent truth-draw / synthesize / estimate pipelines.
/// Truth comes from `truth_scenario`; the estimator uses `estimator_prior`.
/// Results are identical for any thread count.
MonteCarloOutcome run_monte_carlo(const Scenario& truth_scenario,
                                  const PriorSpec& estimator_prior, int trials,
                                  std::uint64_t seed,
                                  const EstimatorOptions& options = {},
                                  bool strict_collision = false,
                                  unsigned threads = 0);

struct SweepPoint {
  Scenario scenario;  // truth scenario at this point
  double estimator_anchor_scale = 1.0;
  MonteCarloOutcome mc;
  BoundResult bound;
  double rmse_theta_u = 0.0;
  double hcrb_theta_u = 0.0;
  double rmse_delta = 0.0;
  double hcrb_delta = 0.0;
};

struct ExperimentSummary {
  ExperimentKind kind = ExperimentKind::Ellipses;
  std::vector<SweepPoint> points;
  std::vector<std::string> files;
  int trials_total = 0;
  int failures_total = 0;

  double failure_rate() const;
};

/// Executes an experiment and, when spec.out_dir is set, writes
/// <kind>_rmse.csv, a kind-specific detail file, summary.csv and
/// manifest.json. Throws ConfigError for invalid specs.
ExperimentSummary run_experiment(const ExperimentSpec& spec);

/// Version string recorded in run manifests.
std::string version_string();

/// Uniform CSV number formatting used by every writer.
std::string format_number(double value);

}  // namespace asyncloc
