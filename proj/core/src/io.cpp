#include "asyncloc/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "asyncloc/errors.hpp"
#include "asyncloc/experiment.hpp"

namespace asyncloc {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  const auto last = s.find_last_not_of(" \t\r");
  if (first == std::string::npos) return {};
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_cell(const std::string& cell, int line, const char* column) {
  std::istringstream is(trim(cell));
  T value{};
  is >> value;
  if (!is || !is.eof()) {
    throw ConfigError("observations line " + std::to_string(line) + ": column '" +
                      column + "' has invalid value '" + cell + "'");
  }
  return value;
}

const char* status_name(EstimateStatus s) {
  switch (s) {
    case EstimateStatus::Converged:
      return "converged";
    case EstimateStatus::MaxIterations:
      return "max_iterations";
    case EstimateStatus::Diverged:
      return "diverged";
  }
  return "unknown";
}

}  // namespace

std::string format_observations(const ObservationSet& obs) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "index,from,to,interval_s\n";
  for (Eigen::Index m = 0; m < obs.size(); ++m) {
    os << m << ',' << obs.sequence.at(m) << ',' << obs.sequence.at(m + 1) << ','
       << obs.y(m) << '\n';
  }
  return os.str();
}

void write_observations(const std::string& path, const ObservationSet& obs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << format_observations(obs);
}

ObservationSet parse_observations(const std::string& text, const Scenario& scenario) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw ConfigError("observations: empty file");
  ++line_no;
  const auto header = split(line);
  if (header.size() != 4 || trim(header[0]) != "index" || trim(header[1]) != "from" ||
      trim(header[2]) != "to" || trim(header[3]) != "interval_s") {
    throw ConfigError("observations: header must be 'index,from,to,interval_s'");
  }
  Sequence seq;
  std::vector<double> y;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 4) {
      throw ConfigError("observations line " + std::to_string(line_no) +
                        ": expected 4 columns");
    }
    const int from = parse_cell<int>(cells[1], line_no, "from");
    const int to = parse_cell<int>(cells[2], line_no, "to");
    const double interval = parse_cell<double>(cells[3], line_no, "interval_s");
    if (seq.empty()) {
      seq.push_back(from);
    } else if (seq.back() != from) {
      throw ConfigError("observations line " + std::to_string(line_no) + ": 'from' " +
                        std::to_string(from) + " does not continue the sequence (" +
                        std::to_string(seq.back()) + " expected)");
    }
    seq.push_back(to);
    y.push_back(interval);
  }
  if (y.empty()) throw ConfigError("observations: no data rows");

  ObservationSet obs;
  obs.sequence = seq;
  obs.speed = scenario.speed;
  obs.dim = scenario.dim;
  obs.nodes = scenario.node_count();
  try {
    obs.h = build_H(seq, obs.nodes, obs.speed);
  } catch (const InvalidSequence& e) {
    throw ConfigError(std::string("observations: ") + e.what());
  }
  obs.q = build_Q(obs.h.rows());
  obs.y = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
  return obs;
}

ObservationSet read_observations(const std::string& path, const Scenario& scenario) {
  std::ifstream in(path);
  if (!in) throw ConfigError("observations: cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_observations(text.str(), scenario);
}

std::string format_state(const StateVector& state, const std::string& prefix) {
  static const char* axes = "xyz";
  std::ostringstream os;
  for (int id = 1; id <= state.nodes(); ++id) {
    for (int a = 0; a < state.dim(); ++a) {
      os << prefix << "position," << id << ',' << axes[a] << ','
         << format_number(state.position(id)(a)) << '\n';
    }
  }
  for (int id = 1; id < state.nodes(); ++id) {
    os << prefix << "delay," << id << ",," << format_number(state.delay(id)) << '\n';
  }
  return os.str();
}

std::string format_estimate(const EstimateResult& result, int dim, int nodes) {
  std::ostringstream os;
  os << "quantity,node_id,axis,value\n";
  os << format_state(StateVector(dim, nodes, result.theta_hat));
  os << "sigma2_hat,,," << format_number(result.sigma2_hat) << '\n';
  os << "outer_iterations,,," << result.outer_iters << '\n';
  os << "inner_iterations,,," << result.inner_iters_total << '\n';
  os << "converged,,," << (result.converged ? 1 : 0) << '\n';
  os << "status,,," << status_name(result.status) << '\n';
  os << "final_cost,,," << format_number(result.final_cost) << '\n';
  return os.str();
}

}  // namespace asyncloc
