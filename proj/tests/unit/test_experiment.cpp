#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "asyncloc/errors.hpp"
#include "asyncloc/experiment.hpp"

namespace asyncloc {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("asyncloc_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentSpec small_spec(ExperimentKind kind, const fs::path& out) {
  ExperimentSpec spec;
  spec.scenario = nominal_scenario();
  spec.kind = kind;
  spec.trials = 20;
  spec.bound_samples = 20;
  spec.seed = 11;
  spec.out_dir = out.string();
  spec.aux_count = 3;
  return spec;
}

TEST(Kinds, NamesRoundTrip) {
  for (const auto& name : kind_names()) {
    const auto k = parse_kind(name);
    ASSERT_TRUE(k.has_value()) << name;
    EXPECT_EQ(to_string(*k), name);
  }
  EXPECT_FALSE(parse_kind("fig9").has_value());
  EXPECT_EQ(kind_names().size(), 7u);
}

TEST(Spec, ValidationRejectsBadValues) {
  ExperimentSpec spec;
  spec.scenario = nominal_scenario();
  EXPECT_NO_THROW(spec.validate());
  spec.trials = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.trials = 5;
  spec.sweep = {1e-9, -1e-9};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.sweep.clear();
  spec.failure_threshold = 2.0;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
  const Scenario s = nominal_scenario();
  const PriorSpec p = make_prior(s);
  const MonteCarloOutcome a = run_monte_carlo(s, p, 24, 3, {}, false, 1);
  const MonteCarloOutcome b = run_monte_carlo(s, p, 24, 3, {}, false, 4);
  EXPECT_EQ(a.mse, b.mse);
  EXPECT_EQ(a.outer_iters, b.outer_iters);
  EXPECT_EQ(a.completed, 24);
  EXPECT_EQ(a.failures(), 24 - a.converged);
  EXPECT_GT(a.position_rmse(s.unknown_ids(), 2), 0.0);
  EXPECT_GT(a.delay_rmse(2, 6), 0.0);
}

TEST(MonteCarlo, StrictCollisionAborts) {
  Scenario s = nominal_scenario();
  s.delay_mean = 1e-9;
  s.delay_std = 1e-12;
  const PriorSpec p = make_prior(s);
  EXPECT_THROW(run_monte_carlo(s, p, 4, 1, {}, true, 1), Error);
  const MonteCarloOutcome lax = run_monte_carlo(s, p, 4, 1, {}, false, 1);
  EXPECT_EQ(lax.collisions, 4);
}

TEST(RunExperiment, WritesExpectedFiles) {
  const fs::path out = scratch("files");
  const ExperimentSummary summary = run_experiment(small_spec(ExperimentKind::Ellipses, out));
  for (const char* f : {"ellipses_rmse.csv", "ellipses_nodes.csv", "summary.csv",
                        "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const std::string rmse = slurp(out / "ellipses_rmse.csv");
  EXPECT_EQ(rmse.rfind("sigma_s,sigma_a_m,sigma_delta_s,", 0), 0u);
  const std::string nodes = slurp(out / "ellipses_nodes.csv");
  int lines = 0;
  for (char c : nodes) lines += c == '\n';
  EXPECT_EQ(lines, 1 + 6);
  EXPECT_EQ(summary.points.size(), 1u);
  fs::remove_all(out);
}

TEST(RunExperiment, SweepHasOnePointPerValuePerPrior) {
  const fs::path out = scratch("sweep");
  ExperimentSpec spec = small_spec(ExperimentKind::RmseVsSigma, out);
  spec.sweep = {1e-9, 4e-9};
  spec.trials = 5;
  const ExperimentSummary summary = run_experiment(spec);
  EXPECT_EQ(summary.points.size(), 4u);
  fs::remove_all(out);
}

TEST(RunExperiment, HistogramCountsAllTrials) {
  const fs::path out = scratch("hist");
  run_experiment(small_spec(ExperimentKind::ConvergenceHist, out));
  std::istringstream in(slurp(out / "convergence_hist_hist.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "outer_iterations,count");
  int total = 0;
  while (std::getline(in, line)) total += std::stoi(line.substr(line.find(',') + 1));
  EXPECT_EQ(total, 20);
  fs::remove_all(out);
}

TEST(RunExperiment, SameSeedSameBytes) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  ExperimentSpec sa = small_spec(ExperimentKind::PriorMismatch, a);
  ExperimentSpec sb = small_spec(ExperimentKind::PriorMismatch, b);
  sa.threads = 1;
  sb.threads = 3;
  run_experiment(sa);
  run_experiment(sb);
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    ASSERT_TRUE(fs::exists(b / name)) << name;
    EXPECT_EQ(slurp(entry.path()), slurp(b / name)) << name;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Format, NumbersAreStable) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2e-9), "2e-09");
  EXPECT_FALSE(version_string().empty());
}

}  // namespace
}  // namespace asyncloc
