#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "asyncloc/numerics.hpp"

namespace asyncloc {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Ranges below this are treated as coincident nodes.
inline constexpr double kCoincidentRange = 1e-9;

/// Ordered list of transmitting node ids (1-based). Consecutive entries form
/// one observed interval at the passive receiver.
using Sequence = std::vector<int>;

/// Stacked parameter [x_1; ...; x_N; delta_1; ...; delta_{N-1}].
/// Node ids are 1-based; node N is the passive receiver and has no delay.
class StateVector {
public:
  StateVector(int dim, int nodes);
  StateVector(int dim, int nodes, Vector values);

  static Eigen::Index length(int dim, int nodes) {
    return static_cast<Eigen::Index>(dim) * nodes + nodes - 1;
  }

  int dim() const { return dim_; }
  int nodes() const { return nodes_; }
  Eigen::Index size() const { return values_.size(); }

  Eigen::Index position_offset(int id) const { return (id - 1) * dim_; }
  Eigen::Index delay_offset(int id) const {
    return static_cast<Eigen::Index>(dim_) * nodes_ + (id - 1);
  }

  auto position(int id) { return values_.segment(position_offset(id), dim_); }
  auto position(int id) const {
    return values_.segment(position_offset(id), dim_);
  }
  double& delay(int id) { return values_(delay_offset(id)); }
  double delay(int id) const { return values_(delay_offset(id)); }

  auto positions() { return values_.head(dim_ * nodes_); }
  auto positions() const { return values_.head(dim_ * nodes_); }
  auto delays() { return values_.tail(nodes_ - 1); }
  auto delays() const { return values_.tail(nodes_ - 1); }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

private:
  int dim_;
  int nodes_;
  Vector values_;
};

/// Lexicographic bijection between unordered pairs {a, b} (a < b, 1-based)
/// and 0-based slots of the range vector.
class PairIndex {
public:
  explicit PairIndex(int nodes) : nodes_(nodes) {}

  int count() const { return nodes_ * (nodes_ - 1) / 2; }
  int slot(int a, int b) const;
  std::pair<int, int> pair(int slot) const;

private:
  int nodes_;
};

/// Measured intervals together with the model structure that produced them.
struct ObservationSet {
  Vector y;           // seconds
  Matrix h;           // M x (N(N-1)/2 + N-1)
  Matrix q;           // M x M noise correlation
  Sequence sequence;
  double speed = kSpeedOfLight;
  int dim = 2;
  int nodes = 0;

  Eigen::Index size() const { return y.size(); }
};

/// Euclidean distances for all node pairs, in PairIndex order.
Vector pair_ranges(const StateVector& state);

/// [ranges; delays].
Vector g(const StateVector& state);

/// Throws InvalidSequence unless every entry is a transceiver id in 1..N-1,
/// consecutive entries differ and there are at least two entries.
void validate_sequence(const Sequence& sequence, int nodes);

/// Maps g onto observed intervals (times c): row m has +1 at {i,j}, +1 at
/// {j,N}, -1 at {i,N} and c in the delay column of j, where (i, j) are the
/// m-th and (m+1)-th transmitters.
Matrix build_H(const Sequence& sequence, int nodes, double speed);

/// Tridiagonal noise correlation with unit diagonal and 1/3 off-diagonal.
Matrix build_Q(Eigen::Index observations);

/// Jacobian of g. Throws DegenerateGeometry when a pair referenced by
/// `required_pairs` (all pairs when empty) is closer than kCoincidentRange.
Matrix jacobian_gamma(const StateVector& state,
                      const std::vector<int>& required_pairs = {});

/// Range slots touched by at least one row of H.
std::vector<int> referenced_pairs(const Sequence& sequence, int nodes);

/// Star from node 1 followed by the remaining pairs in lexicographic order;
/// every unordered transceiver pair appears consecutively at least once.
Sequence generate_sequence(int nodes);

/// True when every unordered transceiver pair occurs as consecutive entries.
bool covers_all_pairs(const Sequence& sequence, int nodes);

/// c^{-1} H g(state).
Vector predict(const StateVector& state, const Matrix& h, double speed);

}  // namespace asyncloc
