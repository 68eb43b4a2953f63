#include <benchmark/benchmark.h>

#include "asyncloc/bound.hpp"
#include "asyncloc/estimate.hpp"
#include "asyncloc/numerics.hpp"
#include "asyncloc/rng.hpp"
#include "asyncloc/scenario.hpp"
#include "asyncloc/simulate.hpp"

using namespace asyncloc;

namespace {

struct Prepared {
  Scenario scenario;
  PriorSpec prior;
  ObservationSet obs;
};

Prepared prepare(int aux) {
  Scenario s = aux > 1 ? with_random_auxiliaries(nominal_scenario(), aux, 1)
                       : nominal_scenario();
  PriorSpec p = make_prior(s);
  auto rng = make_stream(1, StreamDomain::Trial, 0);
  ObservationSet obs = synthesize(sample_truth(s, rng), s, rng);
  return {std::move(s), std::move(p), std::move(obs)};
}

}  // namespace

static void BM_MapEstimate(benchmark::State& st) {
  const Prepared in = prepare(static_cast<int>(st.range(0)));
  const StateVector init = default_init(in.scenario, in.prior);
  int outer = 0;
  for (auto _ : st) {
    const EstimateResult r = map_estimate(in.obs, in.prior, init);
    outer = r.outer_iters;
    benchmark::DoNotOptimize(r.theta_hat.data());
  }
  st.counters["M"] = static_cast<double>(in.obs.size());
  st.counters["outer"] = outer;
}
BENCHMARK(BM_MapEstimate)->Arg(1)->Arg(5)->Arg(10)->Unit(benchmark::kMicrosecond);

static void BM_Hcrb(benchmark::State& st) {
  const Scenario s = nominal_scenario();
  const PriorSpec p = make_prior(s);
  for (auto _ : st) {
    benchmark::DoNotOptimize(hcrb(s, p, static_cast<int>(st.range(0)), 1).inverse.data());
  }
}
BENCHMARK(BM_Hcrb)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Cholesky(benchmark::State& st) {
  const int m = static_cast<int>(st.range(0));
  const Matrix q = build_Q(m);
  for (auto _ : st) benchmark::DoNotOptimize(cholesky_spd(q).lower().data());
}
BENCHMARK(BM_Cholesky)->RangeMultiplier(4)->Range(16, 256);

BENCHMARK_MAIN();
