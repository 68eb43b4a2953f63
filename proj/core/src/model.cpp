#include "asyncloc/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "asyncloc/errors.hpp"

namespace asyncloc {

StateVector::StateVector(int dim, int nodes)
    : StateVector(dim, nodes, Vector::Zero(length(dim, nodes))) {}

StateVector::StateVector(int dim, int nodes, Vector values)
    : dim_(dim), nodes_(nodes), values_(std::move(values)) {
  if (dim < 1 || nodes < 2) {
    throw DimensionMismatch("StateVector: need dim >= 1 and at least 2 nodes");
  }
  if (values_.size() != length(dim, nodes)) {
    std::ostringstream msg;
    msg << "StateVector: expected length " << length(dim, nodes) << ", got "
        << values_.size();
    throw DimensionMismatch(msg.str());
  }
}

int PairIndex::slot(int a, int b) const {
  if (a > b) std::swap(a, b);
  if (a < 1 || b > nodes_ || a == b) {
    std::ostringstream msg;
    msg << "PairIndex: invalid pair {" << a << "," << b << "} for N=" << nodes_;
    throw Error(msg.str());
  }
  // pairs (a', *) for a' < a occupy sum_{k=1}^{a-1} (N - k) slots
  return (a - 1) * nodes_ - (a - 1) * a / 2 + (b - a - 1);
}

std::pair<int, int> PairIndex::pair(int slot) const {
  int a = 1;
  int remaining = slot;
  while (remaining >= nodes_ - a) {
    remaining -= nodes_ - a;
    ++a;
  }
  return {a, a + 1 + remaining};
}

Vector pair_ranges(const StateVector& state) {
  const int n = state.nodes();
  Vector rho(n * (n - 1) / 2);
  int s = 0;
  for (int a = 1; a <= n; ++a) {
    for (int b = a + 1; b <= n; ++b) {
      rho(s++) = (state.position(a) - state.position(b)).norm();
    }
  }
  return rho;
}

Vector g(const StateVector& state) {
  const Vector rho = pair_ranges(state);
  Vector out(rho.size() + state.nodes() - 1);
  out << rho, state.delays();
  return out;
}

void validate_sequence(const Sequence& sequence, int nodes) {
  if (sequence.size() < 2) {
    throw InvalidSequence("sequence needs at least two transmissions");
  }
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    const int id = sequence[k];
    if (id < 1 || id > nodes - 1) {
      std::ostringstream msg;
      msg << "sequence entry " << k << " is node " << id
          << "; transmitters must be in 1.." << nodes - 1;
      throw InvalidSequence(msg.str());
    }
    if (k > 0 && sequence[k - 1] == id) {
      std::ostringstream msg;
      msg << "sequence entries " << k - 1 << " and " << k
          << " repeat node " << id;
      throw InvalidSequence(msg.str());
    }
  }
}

Matrix build_H(const Sequence& sequence, int nodes, double speed) {
  validate_sequence(sequence, nodes);
  const PairIndex index(nodes);
  const int ranges = index.count();
  const auto rows = static_cast<Eigen::Index>(sequence.size() - 1);
  Matrix h = Matrix::Zero(rows, ranges + nodes - 1);
  for (Eigen::Index m = 0; m < rows; ++m) {
    const int i = sequence[m];
    const int j = sequence[m + 1];
    h(m, index.slot(i, j)) += 1.0;
    h(m, index.slot(j, nodes)) += 1.0;
    h(m, index.slot(i, nodes)) -= 1.0;
    h(m, ranges + (j - 1)) = speed;
  }
  return h;
}

Matrix build_Q(Eigen::Index observations) {
  if (observations < 1) throw DimensionMismatch("build_Q: M must be >= 1");
  Matrix q = Matrix::Identity(observations, observations);
  for (Eigen::Index i = 0; i + 1 < observations; ++i) {
    q(i, i + 1) = 1.0 / 3.0;
    q(i + 1, i) = 1.0 / 3.0;
  }
  return q;
}

std::vector<int> referenced_pairs(const Sequence& sequence, int nodes) {
  const PairIndex index(nodes);
  std::set<int> slots;
  for (std::size_t m = 0; m + 1 < sequence.size(); ++m) {
    const int i = sequence[m];
    const int j = sequence[m + 1];
    slots.insert(index.slot(i, j));
    slots.insert(index.slot(j, nodes));
    slots.insert(index.slot(i, nodes));
  }
  return {slots.begin(), slots.end()};
}

Matrix jacobian_gamma(const StateVector& state,
                      const std::vector<int>& required_pairs) {
  const int n = state.nodes();
  const int d = state.dim();
  const PairIndex index(n);
  const int ranges = index.count();
  Matrix gamma = Matrix::Zero(ranges + n - 1, state.size());

  std::vector<bool> required(ranges, required_pairs.empty());
  for (int s : required_pairs) required.at(s) = true;

  for (int s = 0; s < ranges; ++s) {
    const auto [a, b] = index.pair(s);
    const Vector diff = state.position(a) - state.position(b);
    const double rho = diff.norm();
    if (rho < kCoincidentRange) {
      if (required[s]) {
        std::ostringstream msg;
        msg << "nodes " << a << " and " << b << " are coincident (range "
            << rho << " m)";
        throw DegenerateGeometry(msg.str());
      }
      continue;  // unused pair: gradient left at zero
    }
    const Vector unit = diff / rho;
    gamma.block(s, state.position_offset(a), 1, d) = unit.transpose();
    gamma.block(s, state.position_offset(b), 1, d) = -unit.transpose();
  }
  gamma.bottomRightCorner(n - 1, n - 1).setIdentity();
  return gamma;
}

Sequence generate_sequence(int nodes) {
  const int transceivers = nodes - 1;
  if (transceivers < 2) {
    throw InvalidSequence("generate_sequence: need at least two transceivers");
  }
  Sequence seq;
  for (int k = 2; k <= transceivers; ++k) {
    seq.push_back(1);
    seq.push_back(k);
  }
  for (int a = 2; a <= transceivers; ++a) {
    for (int b = a + 1; b <= transceivers; ++b) {
      if (seq.back() == a) {
        seq.push_back(b);
      } else if (seq.back() == b) {
        seq.push_back(a);
      } else {
        seq.push_back(a);
        seq.push_back(b);
      }
    }
  }
  return seq;
}

bool covers_all_pairs(const Sequence& sequence, int nodes) {
  std::set<std::pair<int, int>> seen;
  for (std::size_t m = 0; m + 1 < sequence.size(); ++m) {
    seen.insert(std::minmax(sequence[m], sequence[m + 1]));
  }
  for (int a = 1; a < nodes; ++a) {
    for (int b = a + 1; b < nodes; ++b) {
      if (!seen.count({a, b})) return false;
    }
  }
  return true;
}

Vector predict(const StateVector& state, const Matrix& h, double speed) {
  const Vector gv = g(state);
  if (h.cols() != gv.size()) {
    std::ostringstream msg;
    msg << "predict: H has " << h.cols() << " columns but g has length "
        << gv.size();
    throw DimensionMismatch(msg.str());
  }
  return (h * gv) / speed;
}

}  // namespace asyncloc
