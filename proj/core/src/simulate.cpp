#include "asyncloc/simulate.hpp"

#include <algorithm>

#include "asyncloc/errors.hpp"

namespace asyncloc {

ObservationSet observation_structure(const Scenario& scenario) {
  const int n = scenario.node_count();
  ObservationSet obs;
  obs.sequence = scenario.sequence;
  obs.speed = scenario.speed;
  obs.dim = scenario.dim;
  obs.nodes = n;
  obs.h = build_H(scenario.sequence, n, scenario.speed);
  obs.q = build_Q(obs.h.rows());
  obs.y = Vector::Zero(obs.h.rows());
  return obs;
}

TruthDraw sample_truth(const Scenario& scenario, std::mt19937_64& rng) {
  const int n = scenario.node_count();
  StateVector state(scenario.dim, n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const NodeSpec& node : scenario.nodes) {
    if (node.position.size() != scenario.dim) {
      throw MissingTruth("sample_truth: no position configured for node " +
                         std::to_string(node.id));
    }
    auto pos = state.position(node.id);
    pos = node.position;
    if (node.role == NodeRole::Anchor) {
      for (int a = 0; a < scenario.dim; ++a) pos(a) += node.prior_std * normal(rng);
    }
  }
  for (int j = 1; j < n; ++j) {
    state.delay(j) = scenario.delay_mean + scenario.delay_std * normal(rng);
  }
  return TruthDraw{std::move(state), scenario.noise_std};
}

bool validate_no_collision(const TruthDraw& truth, const Scenario& scenario) {
  const StateVector& s = truth.state;
  const int n = s.nodes();
  double rho_max = 0.0;
  for (int a = 1; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      rho_max = std::max(rho_max, (s.position(a) - s.position(b)).norm());
    }
  }
  return s.delays().minCoeff() > rho_max / scenario.speed;
}

ObservationSet synthesize(const TruthDraw& truth, const Scenario& scenario,
                          std::mt19937_64& rng) {
  ObservationSet obs = observation_structure(scenario);
  const CholeskyFactor qf = cholesky_spd(obs.q);
  obs.y = predict(truth.state, obs.h, obs.speed) +
          sample_correlated_gaussian(qf, truth.sigma, rng);
  return obs;
}

}  // namespace asyncloc
