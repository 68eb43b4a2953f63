#include "asyncloc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "asyncloc/errors.hpp"
#include "asyncloc/rng.hpp"
#include "asyncloc/simulate.hpp"

#ifndef ASYNCLOC_VERSION
#define ASYNCLOC_VERSION "0.0.0-unknown"
#endif

namespace asyncloc {

namespace {

const std::vector<std::pair<ExperimentKind, std::string>>& kind_table() {
  static const std::vector<std::pair<ExperimentKind, std::string>> table = {
      {ExperimentKind::Ellipses, "ellipses"},
      {ExperimentKind::RmseVsSigma, "rmse_vs_sigma"},
      {ExperimentKind::RmseVsSigmaDelta, "rmse_vs_sigma_delta"},
      {ExperimentKind::DelayRmse, "delay_rmse"},
      {ExperimentKind::MultiAuxiliary, "multi_auxiliary"},
      {ExperimentKind::ConvergenceHist, "convergence_hist"},
      {ExperimentKind::PriorMismatch, "prior_mismatch"},
  };
  return table;
}

const std::vector<double> kDefaultSigmaSweep = {0.1e-9, 0.2e-9, 0.5e-9, 1e-9,
                                                2e-9,   5e-9,   10e-9};
const std::vector<double> kDefaultAnchorStds = {0.03, 0.2};
const std::vector<double> kDefaultDelayStds = {1e-9, 100e-9};
constexpr double kSweepAnchorStd = 0.03;
constexpr double kEllipseConfidence = 0.99;

struct TrialRecord {
  bool completed = false;
  bool converged = false;
  bool collision = false;
  int outer_iters = -1;
  double sigma_hat = std::numeric_limits<double>::quiet_NaN();
  Vector error;
  Vector truth;
  std::string message;
};

TrialRecord run_trial(const Scenario& scenario, const PriorSpec& prior,
                      std::uint64_t seed, int index,
                      const EstimatorOptions& options) {
  TrialRecord rec;
  auto rng = make_stream(seed, StreamDomain::Trial, static_cast<std::uint64_t>(index));
  const TruthDraw truth = sample_truth(scenario, rng);
  rec.truth = truth.state.values();
  rec.collision = !validate_no_collision(truth, scenario);
  try {
    const ObservationSet obs = synthesize(truth, scenario, rng);
    const StateVector init = default_init(scenario, prior);
    const EstimateResult est = map_estimate(obs, prior, init, options);
    rec.completed = true;
    rec.converged = est.converged;
    rec.outer_iters = est.outer_iters;
    rec.sigma_hat = std::sqrt(est.sigma2_hat);
    rec.error = est.theta_hat - truth.state.values();
  } catch (const Error& e) {
    rec.message = e.what();
  }
  return rec;
}

Scenario with_anchor_std(Scenario s, double std) {
  for (auto& n : s.nodes) {
    if (n.role == NodeRole::Anchor) n.prior_std = std;
  }
  return s;
}

Scenario without_auxiliaries(const Scenario& base) {
  Scenario s = base;
  s.nodes.clear();
  for (const auto& n : base.nodes) {
    if (n.role != NodeRole::Auxiliary) s.nodes.push_back(n);
  }
  for (int k = 0; k < s.node_count(); ++k) s.nodes[k].id = k + 1;
  return s;
}

bool is_ellipse_kind(ExperimentKind kind) {
  return kind == ExperimentKind::Ellipses || kind == ExperimentKind::MultiAuxiliary ||
         kind == ExperimentKind::PriorMismatch;
}

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot open '" + path.string() + "' for writing");
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      out_ << (k ? "," : "") << cells[k];
    }
    out_ << '\n';
  }

private:
  std::ofstream out_;
};

void write_rmse_table(const std::filesystem::path& path,
                      const std::vector<SweepPoint>& points) {
  CsvWriter csv(path, {"sigma_s", "sigma_a_m", "sigma_delta_s", "estimator_anchor_scale",
                       "trials", "completed", "rmse_theta_u_m", "hcrb_theta_u_m",
                       "rmse_delta_s", "hcrb_delta_s", "mean_outer_iters",
                       "convergence_rate", "collisions"});
  for (const auto& p : points) {
    const auto anchors = p.scenario.anchor_ids();
    const double sigma_a = p.scenario.node(anchors.front()).prior_std;
    csv.row({format_number(p.scenario.noise_std), format_number(sigma_a),
             format_number(p.scenario.delay_std),
             format_number(p.estimator_anchor_scale), std::to_string(p.mc.trials),
             std::to_string(p.mc.completed), format_number(p.rmse_theta_u),
             format_number(p.hcrb_theta_u), format_number(p.rmse_delta),
             format_number(p.hcrb_delta), format_number(p.mc.mean_outer_iters()),
             format_number(p.mc.convergence_rate()), std::to_string(p.mc.collisions)});
  }
}

void write_node_table(const std::filesystem::path& path, const SweepPoint& p) {
  const Scenario& s = p.scenario;
  const StateVector mean_truth(s.dim, s.node_count(), p.mc.mean_truth);
  const StateVector mean_error(s.dim, s.node_count(), p.mc.mean_error);
  const double k = chi2_2dof_quantile(kEllipseConfidence);
  CsvWriter csv(path, {"node_id", "role", "true_x", "true_y", "est_mean_x",
                       "est_mean_y", "mse_xx", "mse_xy", "mse_yy", "hcrb_xx",
                       "hcrb_xy", "hcrb_yy", "mse_semi_major", "mse_semi_minor",
                       "mse_orientation_rad", "hcrb_semi_major", "hcrb_semi_minor",
                       "hcrb_orientation_rad", "confidence", "chi2_scale"});
  for (const auto& node : s.nodes) {
    const Eigen::Index off = mean_truth.position_offset(node.id);
    const Matrix mse = p.mc.mse.block(off, off, 2, 2);
    const Matrix bound = p.bound.position_blocks.at(node.id - 1).topLeftCorner(2, 2);
    const Ellipse em = error_ellipse(mse, kEllipseConfidence);
    const Ellipse eb = error_ellipse(bound, kEllipseConfidence);
    const auto truth = mean_truth.position(node.id);
    const auto err = mean_error.position(node.id);
    csv.row({std::to_string(node.id), to_string(node.role), format_number(truth(0)),
             format_number(truth(1)), format_number(truth(0) + err(0)),
             format_number(truth(1) + err(1)), format_number(mse(0, 0)),
             format_number(mse(0, 1)), format_number(mse(1, 1)),
             format_number(bound(0, 0)), format_number(bound(0, 1)),
             format_number(bound(1, 1)), format_number(em.semi_major),
             format_number(em.semi_minor), format_number(em.orientation),
             format_number(eb.semi_major), format_number(eb.semi_minor),
             format_number(eb.orientation), format_number(kEllipseConfidence),
             format_number(k)});
  }
}

void write_histogram(const std::filesystem::path& path, const MonteCarloOutcome& mc) {
  std::map<int, int> counts;
  for (int it : mc.outer_iters) {
    if (it >= 0) ++counts[it];
  }
  CsvWriter csv(path, {"outer_iterations", "count"});
  for (const auto& [it, count] : counts) {
    csv.row({std::to_string(it), std::to_string(count)});
  }
}

std::vector<SweepPoint> plan_points(const ExperimentSpec& spec) {
  std::vector<SweepPoint> points;
  auto single = [&](Scenario s, double scale) {
    SweepPoint p;
    p.scenario = std::move(s);
    p.estimator_anchor_scale = scale;
    points.push_back(std::move(p));
  };
  const std::vector<double>& sweep = spec.sweep.empty() ? kDefaultSigmaSweep : spec.sweep;
  switch (spec.kind) {
    case ExperimentKind::Ellipses:
    case ExperimentKind::ConvergenceHist:
      single(spec.scenario, 1.0);
      break;
    case ExperimentKind::PriorMismatch:
      single(spec.scenario, spec.mismatch_factor);
      break;
    case ExperimentKind::MultiAuxiliary:
      single(with_random_auxiliaries(without_auxiliaries(spec.scenario), spec.aux_count,
                                     spec.seed),
             1.0);
      break;
    case ExperimentKind::RmseVsSigma: {
      const auto& stds = spec.prior_values.empty() ? kDefaultAnchorStds : spec.prior_values;
      for (double sa : stds) {
        for (double sigma : sweep) {
          Scenario s = with_anchor_std(spec.scenario, sa);
          s.noise_std = sigma;
          single(std::move(s), 1.0);
        }
      }
      break;
    }
    case ExperimentKind::RmseVsSigmaDelta:
    case ExperimentKind::DelayRmse: {
      const auto& stds = spec.prior_values.empty() ? kDefaultDelayStds : spec.prior_values;
      for (double sd : stds) {
        for (double sigma : sweep) {
          Scenario s = with_anchor_std(spec.scenario, kSweepAnchorStd);
          s.noise_std = sigma;
          s.delay_std = sd;
          single(std::move(s), 1.0);
        }
      }
      break;
    }
  }
  return points;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kind_table()) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_kind(const std::string& name) {
  for (const auto& [k, n] : kind_table()) {
    if (n == name) return k;
  }
  return std::nullopt;
}

const std::vector<std::string>& kind_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& entry : kind_table()) v.push_back(entry.second);
    return v;
  }();
  return names;
}

std::string version_string() { return ASYNCLOC_VERSION; }

std::string format_number(double value) {
  std::ostringstream os;
  os << std::setprecision(12) << value;
  return os.str();
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw ConfigError("trials: must be >= 1");
  if (bound_samples < 1) throw ConfigError("bound_samples: must be >= 1");
  for (double v : sweep) {
    if (!(v > 0.0)) throw ConfigError("sweep: values must be > 0");
  }
  for (double v : prior_values) {
    if (!(v > 0.0)) throw ConfigError("prior_values: values must be > 0");
  }
  if (!(mismatch_factor > 0.0)) throw ConfigError("mismatch_factor: must be > 0");
  if (aux_count < 1) throw ConfigError("aux_count: must be >= 1");
  if (!(failure_threshold >= 0.0 && failure_threshold <= 1.0)) {
    throw ConfigError("failure_threshold: must lie in [0, 1]");
  }
  scenario.validate();
}

double MonteCarloOutcome::mean_outer_iters() const {
  double sum = 0.0;
  int count = 0;
  for (int it : outer_iters) {
    if (it >= 0) {
      sum += it;
      ++count;
    }
  }
  return count ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

double MonteCarloOutcome::convergence_rate() const {
  return trials ? static_cast<double>(converged) / trials : 0.0;
}

double MonteCarloOutcome::position_rmse(const std::vector<int>& ids, int dim) const {
  double trace = 0.0;
  for (int id : ids) {
    trace += mse.block((id - 1) * dim, (id - 1) * dim, dim, dim).trace();
  }
  return std::sqrt(trace) / static_cast<double>(ids.size());
}

double MonteCarloOutcome::delay_rmse(int dim, int nodes) const {
  const Eigen::Index off = static_cast<Eigen::Index>(dim) * nodes;
  return rmse_metric(mse.block(off, off, nodes - 1, nodes - 1), nodes - 1);
}

MonteCarloOutcome run_monte_carlo(const Scenario& truth_scenario,
                                  const PriorSpec& estimator_prior, int trials,
                                  std::uint64_t seed, const EstimatorOptions& options,
                                  bool strict_collision, unsigned threads) {
  std::vector<TrialRecord> records(static_cast<std::size_t>(trials));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < trials; k = next++) {
      records[k] = run_trial(truth_scenario, estimator_prior, seed, k, options);
    }
  };
  unsigned pool = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  pool = std::min<unsigned>(pool, static_cast<unsigned>(trials));
  if (pool <= 1) {
    worker();
  } else {
    std::vector<std::jthread> workers;
    for (unsigned k = 0; k < pool; ++k) workers.emplace_back(worker);
  }

  const Eigen::Index t = estimator_prior.mean.size();
  MonteCarloOutcome out;
  out.trials = trials;
  out.mse = Matrix::Zero(t, t);
  out.mean_error = Vector::Zero(t);
  out.mean_truth = Vector::Zero(t);
  for (int k = 0; k < trials; ++k) {
    const TrialRecord& rec = records[k];
    if (rec.collision) {
      if (strict_collision) {
        throw Error("trial " + std::to_string(k) +
                    ": delays do not exceed the largest transceiver range / c");
      }
      ++out.collisions;
    }
    out.mean_truth += rec.truth;
    out.outer_iters.push_back(rec.outer_iters);
    out.sigma_hat.push_back(rec.sigma_hat);
    if (!rec.completed) {
      out.errors.push_back("trial " + std::to_string(k) + ": " + rec.message);
      continue;
    }
    ++out.completed;
    if (rec.converged) ++out.converged;
    out.mse += rec.error * rec.error.transpose();
    out.mean_error += rec.error;
  }
  out.mean_truth /= static_cast<double>(trials);
  if (out.completed > 0) {
    out.mse /= static_cast<double>(out.completed);
    out.mean_error /= static_cast<double>(out.completed);
  }
  return out;
}

double ExperimentSummary::failure_rate() const {
  return trials_total ? static_cast<double>(failures_total) / trials_total : 0.0;
}

ExperimentSummary run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentSummary summary;
  summary.kind = spec.kind;
  summary.points = plan_points(spec);

  for (SweepPoint& p : summary.points) {
    const Scenario& s = p.scenario;
    const PriorSpec true_prior = make_prior(s);
    const PriorSpec est_prior = make_prior(s, p.estimator_anchor_scale);
    p.mc = run_monte_carlo(s, est_prior, spec.trials, spec.seed, spec.estimator,
                           spec.strict_collision, spec.threads);
    p.bound = hcrb(s, true_prior, spec.bound_samples, spec.seed);
    const std::vector<int> unknown = s.unknown_ids();
    p.rmse_theta_u = p.mc.position_rmse(unknown, s.dim);
    p.hcrb_theta_u = p.bound.position_rmse(unknown);
    p.rmse_delta = p.mc.delay_rmse(s.dim, s.node_count());
    p.hcrb_delta = p.bound.delay_rmse();
    summary.trials_total += p.mc.trials;
    summary.failures_total += p.mc.failures();
  }

  if (spec.out_dir.empty()) return summary;

  namespace fs = std::filesystem;
  const fs::path dir(spec.out_dir);
  fs::create_directories(dir);
  const std::string kind = to_string(spec.kind);

  const std::string rmse_file = kind + "_rmse.csv";
  write_rmse_table(dir / rmse_file, summary.points);
  summary.files.push_back(rmse_file);
  if (is_ellipse_kind(spec.kind)) {
    const std::string nodes_file = kind + "_nodes.csv";
    write_node_table(dir / nodes_file, summary.points.front());
    summary.files.push_back(nodes_file);
  }
  if (spec.kind == ExperimentKind::ConvergenceHist) {
    const std::string hist_file = kind + "_hist.csv";
    write_histogram(dir / hist_file, summary.points.front().mc);
    summary.files.push_back(hist_file);
  }

  {
    CsvWriter csv(dir / "summary.csv",
                  {"kind", "file", "seed", "trials", "points", "failure_rate"});
    for (const auto& f : summary.files) {
      csv.row({kind, f, std::to_string(spec.seed), std::to_string(spec.trials),
               std::to_string(summary.points.size()),
               format_number(summary.failure_rate())});
    }
  }
  summary.files.push_back("summary.csv");

  nlohmann::ordered_json manifest;
  manifest["version"] = version_string();
  manifest["kind"] = kind;
  manifest["scenario_path"] = spec.scenario_path;
  manifest["scenario"] = format_scenario(spec.scenario);
  manifest["seed"] = spec.seed;
  manifest["trials"] = spec.trials;
  manifest["bound_samples"] = spec.bound_samples;
  manifest["sweep_s"] = spec.sweep;
  manifest["prior_values"] = spec.prior_values;
  manifest["mismatch_factor"] = spec.mismatch_factor;
  manifest["aux_count"] = spec.aux_count;
  manifest["strict_collision"] = spec.strict_collision;
  manifest["estimator"] = {{"tolerance", spec.estimator.tolerance},
                           {"max_inner", spec.estimator.max_inner},
                           {"max_outer", spec.estimator.max_outer},
                           {"unit_balanced_norm", spec.estimator.unit_balanced_norm},
                           {"ridge", spec.estimator.ridge}};
  manifest["files"] = summary.files;
  manifest["failure_rate"] = summary.failure_rate();
  std::ofstream(dir / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
  summary.files.push_back("manifest.json");
  return summary;
}

}  // namespace asyncloc
