// asyncloc command-line entry point.
//
// Exit codes: 0 success, 2 configuration error, 3 estimation failure (runtime
// error or failure rate above the threshold).

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asyncloc/bound.hpp"
#include "asyncloc/errors.hpp"
#include "asyncloc/estimate.hpp"
#include "asyncloc/experiment.hpp"
#include "asyncloc/io.hpp"
#include "asyncloc/rng.hpp"
#include "asyncloc/scenario.hpp"
#include "asyncloc/simulate.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOptions {
  std::string scenario_path;
  std::uint64_t seed = 1;
  bool ridge = false;
  bool unit_balanced = false;
  double tolerance = 1e-4;
  int max_inner = 100;
  int max_outer = 50;
};

void add_estimator_flags(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_flag("--ridge", opts.ridge, "Add a small ridge to the normal matrix");
  cmd->add_flag("--unit-balanced", opts.unit_balanced,
                "Scale delays by c in convergence norms");
  cmd->add_option("--tolerance", opts.tolerance, "Step-norm convergence threshold")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-inner", opts.max_inner, "Inner iteration cap")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-outer", opts.max_outer, "Outer iteration cap")
      ->check(CLI::PositiveNumber);
}

asyncloc::EstimatorOptions estimator_options(const CommonOptions& opts) {
  asyncloc::EstimatorOptions e;
  e.tolerance = opts.tolerance;
  e.max_inner = opts.max_inner;
  e.max_outer = opts.max_outer;
  e.ridge = opts.ridge;
  e.unit_balanced_norm = opts.unit_balanced;
  return e;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw asyncloc::ConfigError("cannot open '" + path + "' for writing");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace asyncloc;

  CLI::App app{"Self-localization of a passive receiver in an asynchronous network"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  CommonOptions common;

  // run
  auto* run = app.add_subcommand("run", "Run a Monte Carlo experiment");
  std::string kind_name = "ellipses";
  std::string out_dir = "out";
  int trials = 1000;
  int bound_samples = 1000;
  std::vector<double> sweep_ns;
  std::vector<double> prior_values;
  double mismatch_factor = 10.0;
  int aux_count = 10;
  unsigned threads = 0;
  bool strict_collision = false;
  double failure_threshold = 0.1;
  run->add_option("--scenario", common.scenario_path, "Scenario file")->required();
  run->add_option("--kind", kind_name, "Experiment kind")
      ->check(CLI::IsMember(kind_names()));
  run->add_option("--trials", trials, "Monte Carlo trials per sweep point")
      ->check(CLI::PositiveNumber);
  run->add_option("--bound-samples", bound_samples, "Samples for the bound expectation")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed", common.seed, "Master seed");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--sweep-ns", sweep_ns, "Timing noise std values (ns)");
  run->add_option("--prior-values", prior_values,
                  "Anchor prior stds (m) or delay prior stds (s), per kind");
  run->add_option("--mismatch-factor", mismatch_factor,
                  "Estimator anchor std multiplier for prior_mismatch");
  run->add_option("--aux-count", aux_count, "Auxiliary nodes for multi_auxiliary");
  run->add_option("--threads", threads, "Worker threads (0: all cores)");
  run->add_option("--failure-threshold", failure_threshold,
                  "Failure rate above which the run exits with code 3");
  run->add_flag("--strict-collision", strict_collision,
                "Abort when a draw violates the collision condition");
  add_estimator_flags(run, common);

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Estimate from one observation file");
  std::string obs_path;
  std::string estimate_out;
  estimate->add_option("--scenario", common.scenario_path, "Scenario file")->required();
  estimate->add_option("--observations", obs_path, "Observation CSV")->required();
  estimate->add_option("--out", estimate_out, "Output CSV (default stdout)");
  add_estimator_flags(estimate, common);

  // bound
  auto* bound = app.add_subcommand("bound", "Compute the hybrid Cramer-Rao bound");
  std::string bound_out;
  int mc_samples = 1000;
  bound->add_option("--scenario", common.scenario_path, "Scenario file")->required();
  bound->add_option("--trials,--bound-samples", mc_samples, "Monte Carlo samples")
      ->check(CLI::PositiveNumber);
  bound->add_option("--seed", common.seed, "Master seed");
  bound->add_option("--out", bound_out, "Output CSV (default stdout)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Synthesize one observation file");
  std::string sim_out;
  std::string truth_out;
  std::uint64_t sim_trial = 0;
  simulate->add_option("--scenario", common.scenario_path, "Scenario file")->required();
  simulate->add_option("--seed", common.seed, "Master seed");
  simulate->add_option("--trial", sim_trial, "Trial index within the seed");
  simulate->add_option("--out", sim_out, "Observation CSV (default stdout)");
  simulate->add_option("--truth", truth_out, "Write the true state to this CSV");
  simulate->add_flag("--strict-collision", strict_collision,
                     "Fail when the draw violates the collision condition");

  // gen-scenario
  auto* gen = app.add_subcommand("gen-scenario", "Emit a scenario template");
  std::string gen_out;
  int gen_aux = 0;
  gen->add_option("--out", gen_out, "Output file (default stdout)");
  gen->add_option("--aux-count", gen_aux,
                  "Replace the auxiliary node by this many random ones");
  gen->add_option("--seed", common.seed, "Seed for random auxiliary placement");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      ExperimentSpec spec;
      spec.scenario_path = common.scenario_path;
      spec.scenario = load_scenario(common.scenario_path);
      spec.kind = *parse_kind(kind_name);
      for (double v : sweep_ns) spec.sweep.push_back(v * 1e-9);
      spec.prior_values = prior_values;
      spec.trials = trials;
      spec.bound_samples = bound_samples;
      spec.seed = common.seed;
      spec.out_dir = out_dir;
      spec.estimator = estimator_options(common);
      spec.strict_collision = strict_collision;
      spec.mismatch_factor = mismatch_factor;
      spec.aux_count = aux_count;
      spec.threads = threads;
      spec.failure_threshold = failure_threshold;
      const ExperimentSummary summary = run_experiment(spec);
      for (const auto& p : summary.points) {
        std::cout << "sigma=" << format_number(p.scenario.noise_std)
                  << " s  RMSE_theta_u=" << format_number(p.rmse_theta_u)
                  << " m  HCRB_theta_u=" << format_number(p.hcrb_theta_u)
                  << " m  RMSE_delta=" << format_number(p.rmse_delta)
                  << " s  HCRB_delta=" << format_number(p.hcrb_delta)
                  << " s  mean_iters=" << format_number(p.mc.mean_outer_iters())
                  << "  converged=" << format_number(p.mc.convergence_rate()) << '\n';
      }
      std::cout << "wrote";
      for (const auto& f : summary.files) std::cout << ' ' << f;
      std::cout << " to " << out_dir << '\n';
      if (summary.failure_rate() > failure_threshold) {
        std::cerr << "failure rate " << summary.failure_rate() << " exceeds "
                  << failure_threshold << '\n';
        return kExitRuntime;
      }
    } else if (*estimate) {
      const Scenario scenario = load_scenario(common.scenario_path);
      const ObservationSet obs = read_observations(obs_path, scenario);
      const PriorSpec prior = make_prior(scenario);
      const EstimateResult result = map_estimate(
          obs, prior, default_init(scenario, prior), estimator_options(common));
      emit(estimate_out, format_estimate(result, scenario.dim, scenario.node_count()));
      if (!result.converged) return kExitRuntime;
    } else if (*bound) {
      const Scenario scenario = load_scenario(common.scenario_path);
      const BoundResult b = hcrb(scenario, make_prior(scenario), mc_samples, common.seed);
      std::ostringstream os;
      os << "node_id,role,bound_xx,bound_xy,bound_yy,semi_major,semi_minor,"
            "orientation_rad,delay_std_bound_s\n";
      for (const auto& node : scenario.nodes) {
        const Matrix& c = b.position_blocks.at(node.id - 1);
        const Ellipse e = error_ellipse(c.topLeftCorner(2, 2), 0.99);
        os << node.id << ',' << to_string(node.role) << ',' << format_number(c(0, 0))
           << ',' << format_number(c(0, 1)) << ',' << format_number(c(1, 1)) << ','
           << format_number(e.semi_major) << ',' << format_number(e.semi_minor) << ','
           << format_number(e.orientation) << ',';
        if (node.id < scenario.node_count()) {
          os << format_number(std::sqrt(b.delay_block(node.id - 1, node.id - 1)));
        }
        os << '\n';
      }
      emit(bound_out, os.str());
      std::cerr << "HCRB_theta_u=" << format_number(b.position_rmse(scenario.unknown_ids()))
                << " m  HCRB_delta=" << format_number(b.delay_rmse()) << " s\n";
    } else if (*simulate) {
      const Scenario scenario = load_scenario(common.scenario_path);
      auto rng = make_stream(common.seed, StreamDomain::Trial, sim_trial);
      const TruthDraw truth = sample_truth(scenario, rng);
      if (!validate_no_collision(truth, scenario)) {
        std::cerr << "warning: delays do not exceed the largest transceiver range / c\n";
        if (strict_collision) return kExitRuntime;
      }
      const ObservationSet obs = synthesize(truth, scenario, rng);
      emit(sim_out, format_observations(obs));
      if (!truth_out.empty()) {
        emit(truth_out, "quantity,node_id,axis,value\n" + format_state(truth.state));
      }
    } else if (*gen) {
      Scenario s = nominal_scenario();
      if (gen_aux > 0) {
        Scenario base = s;
        base.nodes.clear();
        for (const auto& n : s.nodes) {
          if (n.role != NodeRole::Auxiliary) base.nodes.push_back(n);
        }
        for (int k = 0; k < base.node_count(); ++k) base.nodes[k].id = k + 1;
        s = with_random_auxiliaries(base, gen_aux, common.seed);
      }
      emit(gen_out, format_scenario(s));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
