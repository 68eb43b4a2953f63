#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asyncloc/model.hpp"

namespace asyncloc {

enum class NodeRole { Anchor, Auxiliary, Receiver };

std::string to_string(NodeRole role);

struct NodeSpec {
  int id = 0;
  NodeRole role = NodeRole::Anchor;
  /// Prior mean for anchors, true position for auxiliary nodes and the
  /// receiver.
  Vector position;
  /// Anchor position prior std per axis (m). Unused for other roles.
  double prior_std = 0.0;
  /// Optional estimator initialization (auxiliary nodes only).
  std::optional<Vector> init;
};

/// Network definition: geometry, roles, priors, noise level and transmission
/// sequence. Node ids run 1..N and node N is the passive receiver.
struct Scenario {
  std::string name = "scenario";
  int dim = 2;
  double speed = kSpeedOfLight;
  double noise_std = 2e-9;    // s
  double delay_mean = 1e-6;   // s
  double delay_std = 10e-9;   // s
  std::vector<NodeSpec> nodes;
  Sequence sequence;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int receiver_id() const { return node_count(); }
  const NodeSpec& node(int id) const { return nodes.at(id - 1); }
  NodeSpec& node(int id) { return nodes.at(id - 1); }

  std::vector<int> anchor_ids() const;
  /// Nodes with noninformative position priors (auxiliary nodes and the
  /// receiver), in id order.
  std::vector<int> unknown_ids() const;
  std::vector<int> auxiliary_ids() const;

  /// Throws ConfigError with a field-level message on the first violation.
  void validate() const;
};

/// Parses a scenario file (YAML). Throws ConfigError on any problem.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text);

/// Serializes a scenario in the same format load_scenario reads.
std::string format_scenario(const Scenario& scenario);

/// Four anchors on a 10 m square, one auxiliary node and the receiver.
Scenario nominal_scenario();

/// Returns a copy with `count` auxiliary nodes inserted before the receiver,
/// placed uniformly inside the anchor bounding box and at least
/// `min_separation` from every other node. The sequence is regenerated.
Scenario with_random_auxiliaries(const Scenario& base, int count,
                                 std::uint64_t seed,
                                 double min_separation = 1.0);

}  // namespace asyncloc
