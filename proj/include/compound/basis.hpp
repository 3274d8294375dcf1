#pragma once

#include <cmath>
#include <numbers>
#include <span>

#include "compound/coefficient_map.hpp"
#include "compound/errors.hpp"
#include "compound/multiindex.hpp"

namespace compound {

// Trigonometric basis on [0,1]:
//   phi_0(u) = 1
//   phi_k(u) = sqrt(2) cos(2 pi k u)     for k > 0
//   phi_k(u) = sqrt(2) sin(2 pi |k| u)   for k < 0
// The negative branch is pinned to |k| so phi_{-k} = -phi_k never sneaks in
// through a sign convention mismatch between components.
inline double eval_basis_1d(int k, double u) {
  if (k == 0) return 1.0;
  double arg = 2.0 * std::numbers::pi * std::abs(k) * u;
  return std::numbers::sqrt2 * (k > 0 ? std::cos(arg) : std::sin(arg));
}

// Tensor product phi_j(x) = prod_l phi_{j_l}(x_l).
inline double eval_basis(const MultiIndex& j, std::span<const double> x) {
  if (static_cast<int>(x.size()) != j.dim())
    throw ParameterError("eval_basis: point dimension " + std::to_string(x.size()) +
                         " does not match index dimension " + std::to_string(j.dim()));
  double p = 1.0;
  for (int i = 0; i < j.dim(); ++i) p *= eval_basis_1d(j.entries[i], x[i]);
  return p;
}

// Pointwise synthesis of a coefficient map.
inline double eval_function(const CoefficientMap& f, std::span<const double> x) {
  double s = 0.0;
  for (const auto& [j, theta] : f.values) s += theta * eval_basis(j, x);
  return s;
}

}  // namespace compound
