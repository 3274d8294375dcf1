#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "compound/coefficient_map.hpp"
#include "compound/errors.hpp"
#include "compound/multiindex.hpp"
#include "compound/rng.hpp"
#include "compound/structure.hpp"

namespace compound {

// Sobolev ball restricted to functions depending on the coordinates in V:
// coefficients supported on {j != 0 : supp(j) subseteq V} with
// sum |j|_inf^{2 beta} theta_j^2 <= L.
struct SobolevBall {
  std::vector<int> support;  // sorted 1-based coordinates
  double beta = 1.0;
  double L = 1.0;

  SobolevBall(std::vector<int> V, double beta_, double L_)
      : support(std::move(V)), beta(beta_), L(L_) {
    std::sort(support.begin(), support.end());
    if (std::adjacent_find(support.begin(), support.end()) != support.end())
      throw ParameterError("sobolev ball: duplicate coordinate in V");
    if (beta <= 0) throw ParameterError("sobolev ball: beta must be > 0");
    if (L <= 0) throw ParameterError("sobolev ball: L must be > 0");
  }

  bool contains(const CoefficientMap& f, double tol = 1e-9) const {
    for (const auto& [j, v] : f.values) {
      if (v == 0.0) continue;
      if (j.is_zero()) return false;  // atoms live in the zero-mean subspace
      if (!j.support_within(support)) return false;
    }
    return f.sobolev_form(beta) <= L * (1.0 + tol);
  }
};

// Low-frequency tensor class: indices in A^d with supp(j) subseteq V.
struct TensorClass {
  std::vector<int> support;  // sorted 1-based coordinates
  std::vector<int> levels;   // admissible per-coordinate values A, sorted

  TensorClass(std::vector<int> V, std::vector<int> A)
      : support(std::move(V)), levels(std::move(A)) {
    std::sort(support.begin(), support.end());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.empty()) throw ParameterError("tensor class: level set A is empty");
  }

  int max_level() const {
    int k = 0;
    for (int a : levels) k = std::max(k, std::abs(a));
    return k;
  }
};

// Nonzero indices j in A^d with supp(j) subseteq V, lexicographic order.
inline std::vector<MultiIndex> tensor_admissible_indices(int d, const TensorClass& cls) {
  for (int c : cls.support)
    if (c < 1 || c > d) throw ParameterError("tensor class: support coordinate outside [1,d]");
  bool zero_allowed = std::binary_search(cls.levels.begin(), cls.levels.end(), 0);
  if (!zero_allowed && static_cast<int>(cls.support.size()) < d)
    return {};  // coordinates outside V must sit at level 0
  std::vector<MultiIndex> out;
  std::vector<int> cur(d, 0);
  auto rec = [&](auto&& self, int pos) -> void {
    if (pos == d) {
      MultiIndex j(cur);
      if (!j.is_zero()) out.push_back(std::move(j));
      return;
    }
    bool in_v = std::binary_search(cls.support.begin(), cls.support.end(), pos + 1);
    if (!in_v) {
      cur[pos] = 0;
      self(self, pos + 1);
      return;
    }
    for (int a : cls.levels) {
      cur[pos] = a;
      self(self, pos + 1);
    }
    cur[pos] = 0;
  };
  rec(rec, 0);
  return out;
}

// Atom from explicit coefficients, validated against the class.
inline CoefficientMap make_tensor_atom(int d, const TensorClass& cls, const CoefficientMap& coeffs) {
  auto admissible = tensor_admissible_indices(d, cls);
  CoefficientMap out(d);
  for (const auto& [j, v] : coeffs.values) {
    if (j.dim() != d) throw ParameterError("tensor atom: index dimension mismatch");
    if (!std::binary_search(admissible.begin(), admissible.end(), j))
      throw ParameterError("tensor atom: index " + to_string(j) +
                           " is not admissible for the class (levels or support)");
    out.set(j, v);
  }
  return out;
}

// A compound function: scalar mean plus one zero-mean atom per support.
struct CompoundFunction {
  int d = 0;
  double mean = 0.0;
  Structure structure;
  std::vector<CoefficientMap> atoms;  // aligned with structure.supports

  // Canonical flattened form; theta_0 carries the mean.
  CoefficientMap flatten() const {
    CoefficientMap f(d);
    f.set(MultiIndex::zero(d), mean);
    for (const auto& a : atoms)
      for (const auto& [j, v] : a.values) f.values[j] += v;
    return f;
  }
};

// Assembles and validates a compound function.  Every atom must live on its
// declared support and in the zero-mean subspace.
inline CompoundFunction compose(double mean, const Structure& st, std::vector<CoefficientMap> atoms) {
  if (static_cast<int>(atoms.size()) != st.m())
    throw ParameterError("compose: " + std::to_string(atoms.size()) + " atoms for " +
                         std::to_string(st.m()) + " supports");
  for (int l = 0; l < st.m(); ++l) {
    for (const auto& [j, v] : atoms[l].values) {
      if (j.dim() != st.d) throw ParameterError("compose: atom index dimension mismatch");
      if (v == 0.0) continue;
      if (j.is_zero())
        throw ParameterError("compose: atom " + std::to_string(l) +
                             " has a zero-index coefficient (means are carried separately)");
      if (!j.support_within(st.supports[l]))
        throw ParameterError("compose: atom " + std::to_string(l) + " has index " + to_string(j) +
                             " outside its support");
    }
    atoms[l].dim = st.d;
  }
  CompoundFunction f;
  f.d = st.d;
  f.mean = mean;
  f.structure = st;
  f.atoms = std::move(atoms);
  return f;
}

// Random atom on the boundary sphere (or at radius fraction rho in (0,1])
// of a Sobolev ball: i.i.d. standard normal proto-coefficients on the
// admissible indices, rescaled so the Sobolev form equals rho * L.
inline CoefficientMap sample_sobolev_atom(int d, const SobolevBall& ball, int cutoff, Rng& rng,
                                          double rho = 1.0) {
  if (rho <= 0.0 || rho > 1.0) throw ParameterError("sample_sobolev_atom: rho must be in (0,1]");
  CoefficientMap atom(d);
  if (ball.support.empty()) return atom;  // no admissible nonzero index
  IndexBox box(d, cutoff, ball.support);
  double form = 0.0;
  for (const MultiIndex& j : enumerate_indices(box)) {
    if (j.is_zero()) continue;
    double g = rng.normal();
    atom.set(j, g);
    form += std::pow(static_cast<double>(j.linf()), 2.0 * ball.beta) * g * g;
  }
  if (form == 0.0) return CoefficientMap(d);  // cutoff 0: nothing admissible
  atom.scale(std::sqrt(rho * ball.L / form));
  return atom;
}

// Realized constant of the norm-compatibility condition:
//   ratio = || sum_l f_l ||^2 / sum_l || f_l ||^2.
// Exactly 1 for disjoint supports (coefficient supports cannot collide).
inline double verify_norm_compatibility(const CompoundFunction& f) {
  double sum_norms = 0.0;
  CoefficientMap total(f.d);
  for (const auto& a : f.atoms) {
    sum_norms += a.l2_sq();
    total.add_scaled(a, 1.0);
  }
  if (sum_norms == 0.0)
    throw ParameterError("norm compatibility: all atoms are zero, the ratio is undefined");
  return total.l2_sq() / sum_norms;
}

}  // namespace compound
