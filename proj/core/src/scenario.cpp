#include "asyncloc/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "asyncloc/errors.hpp"
#include "asyncloc/rng.hpp"

namespace asyncloc {

std::string to_string(NodeRole role) {
  switch (role) {
    case NodeRole::Anchor:
      return "anchor";
    case NodeRole::Auxiliary:
      return "auxiliary";
    case NodeRole::Receiver:
      return "receiver";
  }
  return "unknown";
}

namespace {

std::vector<int> ids_with(const Scenario& s, auto pred) {
  std::vector<int> ids;
  for (const auto& n : s.nodes) {
    if (pred(n.role)) ids.push_back(n.id);
  }
  return ids;
}

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

template <typename T>
T read_scalar(const YAML::Node& node, const std::string& field) {
  if (!node || !node.IsScalar()) config_error(field, "missing or not a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    config_error(field, "cannot parse value '" + node.Scalar() + "'");
  }
}

template <typename T>
T read_scalar_or(const YAML::Node& node, const std::string& field, T fallback) {
  if (!node) return fallback;
  return read_scalar<T>(node, field);
}

Vector read_point(const YAML::Node& node, const std::string& field, int dim) {
  if (!node || !node.IsSequence()) config_error(field, "missing or not a list");
  if (static_cast<int>(node.size()) != dim) {
    std::ostringstream msg;
    msg << "expected " << dim << " coordinates, got " << node.size();
    config_error(field, msg.str());
  }
  Vector p(dim);
  for (int k = 0; k < dim; ++k) {
    p(k) = read_scalar<double>(node[k], field + "[" + std::to_string(k) + "]");
  }
  return p;
}

NodeRole parse_role(const std::string& text, const std::string& field) {
  if (text == "anchor") return NodeRole::Anchor;
  if (text == "auxiliary") return NodeRole::Auxiliary;
  if (text == "receiver") return NodeRole::Receiver;
  config_error(field, "unknown role '" + text +
                          "' (expected anchor, auxiliary or receiver)");
}

// shortest text that reads back to the same double
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void emit_point(std::ostream& os, const Vector& p) {
  os << '[';
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (k) os << ", ";
    os << num(p(k));
  }
  os << ']';
}

}  // namespace

std::vector<int> Scenario::anchor_ids() const {
  return ids_with(*this, [](NodeRole r) { return r == NodeRole::Anchor; });
}

std::vector<int> Scenario::unknown_ids() const {
  return ids_with(*this, [](NodeRole r) { return r != NodeRole::Anchor; });
}

std::vector<int> Scenario::auxiliary_ids() const {
  return ids_with(*this, [](NodeRole r) { return r == NodeRole::Auxiliary; });
}

void Scenario::validate() const {
  if (dim != 2 && dim != 3) config_error("dimension", "must be 2 or 3");
  if (!(speed > 0.0) || !std::isfinite(speed)) {
    config_error("propagation_speed", "must be positive and finite");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    config_error("noise_std", "must be >= 0");
  }
  if (!std::isfinite(delay_mean)) config_error("delay.mean", "must be finite");
  if (!(delay_std >= 0.0) || !std::isfinite(delay_std)) {
    config_error("delay.std", "must be >= 0");
  }
  const int n = node_count();
  if (n < 3) config_error("nodes", "need at least 3 nodes (2 transceivers)");
  int receivers = 0;
  for (int k = 0; k < n; ++k) {
    const NodeSpec& node = nodes[k];
    const std::string field = "nodes[" + std::to_string(k) + "]";
    if (node.id != k + 1) {
      config_error(field + ".id", "ids must be 1..N in order, found " +
                                      std::to_string(node.id));
    }
    if (node.position.size() != dim || !node.position.allFinite()) {
      config_error(field, node.role == NodeRole::Anchor
                              ? "anchor needs a finite 'mean' position"
                              : "missing truth position for node " +
                                    std::to_string(node.id));
    }
    if (node.role == NodeRole::Anchor &&
        (!(node.prior_std >= 0.0) || !std::isfinite(node.prior_std))) {
      config_error(field + ".std", "anchor prior std must be >= 0");
    }
    if (node.init && (node.init->size() != dim || !node.init->allFinite())) {
      config_error(field + ".init", "must have one finite coordinate per axis");
    }
    if (node.role == NodeRole::Receiver) ++receivers;
  }
  if (receivers != 1 || nodes.back().role != NodeRole::Receiver) {
    config_error("nodes", "exactly one receiver is required and it must be node N=" +
                              std::to_string(n));
  }
  if (anchor_ids().empty()) config_error("nodes", "at least one anchor is required");
  try {
    validate_sequence(sequence, n);
  } catch (const InvalidSequence& e) {
    config_error("sequence", e.what());
  }
  if (!covers_all_pairs(sequence, n)) {
    config_error("sequence", "not every transceiver pair occurs consecutively");
  }
}

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scenario: YAML parse error: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("scenario: top level must be a mapping");

  Scenario s;
  s.name = read_scalar_or<std::string>(root["name"], "name", "scenario");
  s.dim = read_scalar_or<int>(root["dimension"], "dimension", 2);
  if (s.dim != 2 && s.dim != 3) config_error("dimension", "must be 2 or 3");
  s.speed = read_scalar_or<double>(root["propagation_speed"],
                                   "propagation_speed", kSpeedOfLight);
  s.noise_std = read_scalar<double>(root["noise_std"], "noise_std");
  const YAML::Node delay = root["delay"];
  if (!delay || !delay.IsMap()) config_error("delay", "missing section");
  s.delay_mean = read_scalar<double>(delay["mean"], "delay.mean");
  s.delay_std = read_scalar<double>(delay["std"], "delay.std");
  const double anchor_std =
      read_scalar_or<double>(root["anchor_std"], "anchor_std", -1.0);

  const YAML::Node nodes = root["nodes"];
  if (!nodes || !nodes.IsSequence()) config_error("nodes", "missing list");
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::string field = "nodes[" + std::to_string(k) + "]";
    const YAML::Node item = nodes[k];
    NodeSpec node;
    node.id = read_scalar<int>(item["id"], field + ".id");
    node.role = parse_role(read_scalar<std::string>(item["role"], field + ".role"),
                           field + ".role");
    if (node.role == NodeRole::Anchor) {
      node.position = read_point(item["mean"], field + ".mean", s.dim);
      node.prior_std = read_scalar_or<double>(item["std"], field + ".std", anchor_std);
      if (node.prior_std < 0.0) {
        config_error(field + ".std", "anchor needs 'std' (or a top-level anchor_std)");
      }
    } else {
      if (!item["truth"]) {
        config_error(field + ".truth", "missing truth position for " +
                                           to_string(node.role) + " node " +
                                           std::to_string(node.id));
      }
      node.position = read_point(item["truth"], field + ".truth", s.dim);
      if (item["init"]) node.init = read_point(item["init"], field + ".init", s.dim);
    }
    s.nodes.push_back(std::move(node));
  }
  std::sort(s.nodes.begin(), s.nodes.end(),
            [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });

  const YAML::Node seq = root["sequence"];
  if (!seq || (seq.IsScalar() && seq.Scalar() == "auto")) {
    if (s.node_count() >= 3) s.sequence = generate_sequence(s.node_count());
  } else if (seq.IsSequence()) {
    for (std::size_t k = 0; k < seq.size(); ++k) {
      s.sequence.push_back(
          read_scalar<int>(seq[k], "sequence[" + std::to_string(k) + "]"));
    }
  } else {
    config_error("sequence", "must be 'auto' or a list of node ids");
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_scenario(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string format_scenario(const Scenario& s) {
  std::ostringstream os;
  os << "name: " << s.name << "\n";
  os << "dimension: " << s.dim << "\n";
  os << "propagation_speed: " << num(s.speed) << "  # m/s\n";
  os << "noise_std: " << num(s.noise_std) << "  # timing noise sigma (s)\n";
  os << "delay:\n";
  os << "  mean: " << num(s.delay_mean) << "  # nominal turn-around delay (s)\n";
  os << "  std: " << num(s.delay_std) << "  # s\n";
  os << "nodes:\n";
  for (const auto& n : s.nodes) {
    os << "  - id: " << n.id << "\n    role: " << to_string(n.role) << "\n";
    if (n.role == NodeRole::Anchor) {
      os << "    mean: ";
      emit_point(os, n.position);
      os << "\n    std: " << num(n.prior_std) << "\n";
    } else {
      os << "    truth: ";
      emit_point(os, n.position);
      os << "\n";
      if (n.init) {
        os << "    init: ";
        emit_point(os, *n.init);
        os << "\n";
      }
    }
  }
  if (s.node_count() >= 3 && s.sequence == generate_sequence(s.node_count())) {
    os << "sequence: auto\n";
  } else {
    os << "sequence: [";
    for (std::size_t k = 0; k < s.sequence.size(); ++k) {
      os << (k ? ", " : "") << s.sequence[k];
    }
    os << "]\n";
  }
  return os.str();
}

Scenario nominal_scenario() {
  Scenario s;
  s.name = "nominal";
  const double corners[4][2] = {{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  for (int k = 0; k < 4; ++k) {
    NodeSpec a;
    a.id = k + 1;
    a.role = NodeRole::Anchor;
    a.position = Vector{{corners[k][0], corners[k][1]}};
    a.prior_std = 0.2;
    s.nodes.push_back(a);
  }
  NodeSpec aux;
  aux.id = 5;
  aux.role = NodeRole::Auxiliary;
  aux.position = Vector{{7.0, 3.0}};
  s.nodes.push_back(aux);
  NodeSpec rx;
  rx.id = 6;
  rx.role = NodeRole::Receiver;
  rx.position = Vector{{4.0, 6.0}};
  s.nodes.push_back(rx);
  s.sequence = generate_sequence(6);
  return s;
}

Scenario with_random_auxiliaries(const Scenario& base, int count,
                                 std::uint64_t seed, double min_separation) {
  const std::vector<int> anchors = base.anchor_ids();
  if (anchors.empty()) throw ConfigError("with_random_auxiliaries: no anchors");
  Vector lo = base.node(anchors.front()).position;
  Vector hi = lo;
  for (int id : anchors) {
    lo = lo.cwiseMin(base.node(id).position);
    hi = hi.cwiseMax(base.node(id).position);
  }

  Scenario out = base;
  out.name = base.name + "_aux" + std::to_string(count);
  NodeSpec receiver = out.nodes.back();
  out.nodes.pop_back();

  std::vector<Vector> occupied;
  for (const auto& n : base.nodes) occupied.push_back(n.position);

  auto rng = make_stream(seed, StreamDomain::Layout, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int kMaxAttempts = 100000;
  for (int k = 0; k < count; ++k) {
    Vector candidate(base.dim);
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      for (int a = 0; a < base.dim; ++a) {
        candidate(a) = lo(a) + unit(rng) * (hi(a) - lo(a));
      }
      placed = std::all_of(occupied.begin(), occupied.end(), [&](const Vector& p) {
        return (p - candidate).norm() >= min_separation;
      });
    }
    if (!placed) {
      throw ConfigError("with_random_auxiliaries: cannot place node " +
                        std::to_string(k + 1) + " with the requested separation");
    }
    occupied.push_back(candidate);
    NodeSpec aux;
    aux.role = NodeRole::Auxiliary;
    aux.position = candidate;
    out.nodes.push_back(aux);
  }
  out.nodes.push_back(receiver);
  for (int k = 0; k < out.node_count(); ++k) out.nodes[k].id = k + 1;
  out.sequence = generate_sequence(out.node_count());
  out.validate();
  return out;
}

}  // namespace asyncloc
