#pragma once

#include <random>

#include "asyncloc/model.hpp"
#include "asyncloc/scenario.hpp"

namespace asyncloc {

/// One realization of the random parameters plus the deterministic ones.
struct TruthDraw {
  StateVector state;
  double sigma = 0.0;  // true timing noise std (s)
};

/// Noise-free observation structure (H, Q, sequence) for a scenario; y is
/// left at zero.
ObservationSet observation_structure(const Scenario& scenario);

/// Anchors ~ N(mean, std^2 I), delays ~ N(delay_mean, delay_std^2); auxiliary
/// nodes and the receiver are copied from their truth positions.
TruthDraw sample_truth(const Scenario& scenario, std::mt19937_64& rng);

/// True iff every delay strictly exceeds the largest transceiver-to-
/// transceiver range divided by c.
bool validate_no_collision(const TruthDraw& truth, const Scenario& scenario);

/// y = c^{-1} H g(truth) + sigma L z, with Q = L L^T.
ObservationSet synthesize(const TruthDraw& truth, const Scenario& scenario,
                          std::mt19937_64& rng);

}  // namespace asyncloc
