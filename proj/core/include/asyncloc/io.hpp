#pragma once

#include <string>

#include "asyncloc/estimate.hpp"
#include "asyncloc/model.hpp"
#include "asyncloc/scenario.hpp"

namespace asyncloc {

/// Observation file: CSV with header `index,from,to,interval_s`, one row per
/// interval. Row m's `to` must equal row m+1's `from`.
std::string format_observations(const ObservationSet& obs);
void write_observations(const std::string& path, const ObservationSet& obs);

/// Parses an observation file against a scenario (for N, d and c).
/// Throws ConfigError.
ObservationSet parse_observations(const std::string& text, const Scenario& scenario);
ObservationSet read_observations(const std::string& path, const Scenario& scenario);

/// CSV listing of a state vector: `quantity,node_id,axis,value`.
std::string format_state(const StateVector& state, const std::string& quantity_prefix = "");

/// Estimate report: the state plus sigma2_hat, iteration counts, status and cost.
std::string format_estimate(const EstimateResult& result, int dim, int nodes);

}  // namespace asyncloc
