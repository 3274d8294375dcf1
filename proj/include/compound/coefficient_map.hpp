#pragma once

#include <cmath>
#include <map>

#include "compound/multiindex.hpp"

namespace compound {

// Sparse map j -> theta_j.  This flattened form is the canonical function
// representation everywhere: the decomposition into atoms is not
// identifiable, the coefficient map is.  Keys are kept in lexicographic
// order so serialization and accumulation are reproducible.
struct CoefficientMap {
  int dim = 0;
  std::map<MultiIndex, double> values;

  CoefficientMap() = default;
  explicit CoefficientMap(int d) : dim(d) {}

  double get(const MultiIndex& j) const {
    auto it = values.find(j);
    return it == values.end() ? 0.0 : it->second;
  }

  void set(const MultiIndex& j, double v) { values[j] = v; }

  void add(const MultiIndex& j, double v) { values[j] += v; }

  std::size_t size() const { return values.size(); }

  double l2_sq() const {
    double s = 0.0;
    for (const auto& [j, v] : values) s += v * v;
    return s;
  }

  // Sobolev quadratic form sum_j |j|_inf^{2 beta} theta_j^2.  The zero index
  // contributes nothing (|0|^{2 beta} = 0 for beta > 0).
  double sobolev_form(double beta) const {
    double s = 0.0;
    for (const auto& [j, v] : values) {
      int a = j.linf();
      if (a > 0) s += std::pow(static_cast<double>(a), 2.0 * beta) * v * v;
    }
    return s;
  }

  void add_scaled(const CoefficientMap& other, double c) {
    for (const auto& [j, v] : other.values) values[j] += c * v;
  }

  void scale(double c) {
    for (auto& [j, v] : values) v *= c;
  }
};

// Squared L2 distance over the union of supports (Parseval: this equals the
// integral of (f-g)^2 for the orthonormal basis).
inline double distance_sq(const CoefficientMap& a, const CoefficientMap& b) {
  double s = 0.0;
  auto ia = a.values.begin();
  auto ib = b.values.begin();
  while (ia != a.values.end() || ib != b.values.end()) {
    if (ib == b.values.end() || (ia != a.values.end() && ia->first < ib->first)) {
      s += ia->second * ia->second;
      ++ia;
    } else if (ia == a.values.end() || ib->first < ia->first) {
      s += ib->second * ib->second;
      ++ib;
    } else {
      double d = ia->second - ib->second;
      s += d * d;
      ++ia;
      ++ib;
    }
  }
  return s;
}

inline CoefficientMap difference(const CoefficientMap& a, const CoefficientMap& b) {
  CoefficientMap out = a;
  for (const auto& [j, v] : b.values) out.values[j] -= v;
  return out;
}

}  // namespace compound
