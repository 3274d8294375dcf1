#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "compound/combinatorics.hpp"
#include "compound/errors.hpp"
#include "compound/sequence_model.hpp"
#include "compound/structure.hpp"

namespace compound {

// A weak projection estimator: keep Y_j exactly when some support admits j
// at its bandwidth, keep Y_0 always, zero out everything else.
struct Candidate {
  Structure structure;
  std::vector<int> bandwidths;  // aligned with structure.supports

  int m() const { return structure.m(); }
  int stratum() const { return structure.stratum(); }

  static Candidate constant(int d) { return Candidate{Structure::empty(d), {}}; }
};

// Canonical order: stratum, then count, then supports, then bandwidths.
// Used for stable candidate ids and deterministic tie-breaking.
inline bool candidate_less(const Candidate& a, const Candidate& b) {
  return std::forward_as_tuple(a.stratum(), a.m(), a.structure.supports, a.bandwidths) <
         std::forward_as_tuple(b.stratum(), b.m(), b.structure.supports, b.bandwidths);
}

inline bool candidate_eq(const Candidate& a, const Candidate& b) {
  return a.structure.supports == b.structure.supports && a.bandwidths == b.bandwidths;
}

struct CandidateLess {
  bool operator()(const Candidate& a, const Candidate& b) const { return candidate_less(a, b); }
};

inline std::string candidate_key(const Candidate& c) {
  std::string out;
  for (int l = 0; l < c.m(); ++l) {
    if (l) out += "|";
    const auto& v = c.structure.supports[l];
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(v[i]);
    }
    out += ":" + std::to_string(c.bandwidths[l]);
  }
  return out.empty() ? "-" : out;
}

inline Candidate make_candidate(Structure st, std::vector<int> bandwidths, int cutoff) {
  if (static_cast<int>(bandwidths.size()) != st.m())
    throw ParameterError("candidate: " + std::to_string(bandwidths.size()) + " bandwidths for " +
                         std::to_string(st.m()) + " supports");
  for (int t : bandwidths)
    if (t < 0 || t > cutoff)
      throw ParameterError("candidate: bandwidth " + std::to_string(t) + " outside [0," +
                           std::to_string(cutoff) + "]");
  return Candidate{std::move(st), std::move(bandwidths)};
}

// Indices the candidate keeps: the zero index plus every j with
// supp(j) inside some V_l and |j|_inf <= t_l.  Overlapping supports may
// admit the same index; the set keeps it once.
inline std::vector<MultiIndex> filter_indices(const Candidate& c) {
  std::set<MultiIndex> keep;
  keep.insert(MultiIndex::zero(c.structure.d));
  for (int l = 0; l < c.m(); ++l) {
    IndexBox box(c.structure.d, c.bandwidths[l], c.structure.supports[l]);
    for (MultiIndex& j : enumerate_indices(box)) keep.insert(std::move(j));
  }
  return std::vector<MultiIndex>(keep.begin(), keep.end());
}

inline bool candidate_keeps(const Candidate& c, const MultiIndex& j) {
  if (j.is_zero()) return true;
  for (int l = 0; l < c.m(); ++l)
    if (j.linf() <= c.bandwidths[l] && j.support_within(c.structure.supports[l])) return true;
  return false;
}

inline void check_candidate_against(const SequenceObservation& obs, const Candidate& c) {
  if (c.structure.d != obs.d)
    throw ParameterError("candidate dimension " + std::to_string(c.structure.d) +
                         " does not match observation dimension " + std::to_string(obs.d));
  for (int t : c.bandwidths)
    if (t > obs.cutoff)
      throw ParameterError("candidate bandwidth " + std::to_string(t) +
                           " exceeds the observation cutoff " + std::to_string(obs.cutoff));
}

inline CoefficientMap projection_estimate(const SequenceObservation& obs, const Candidate& c) {
  check_candidate_against(obs, c);
  CoefficientMap est(obs.d);
  for (const MultiIndex& j : filter_indices(c)) {
    auto it = obs.values.find(j);
    if (it != obs.values.end()) est.set(j, it->second);
  }
  return est;
}

// pen(t, eta) = 2 eps^2 prod_l (2 t_l + 1)^{|V_l|}; the empty product gives
// the constant candidate 2 eps^2.  A pure formula: the noise-level range is
// enforced where observations are made, not here.
inline double penalty(const Candidate& c, double epsilon) {
  double prod = 1.0;
  for (int l = 0; l < c.m(); ++l)
    prod *= std::pow(2.0 * c.bandwidths[l] + 1.0, static_cast<double>(c.structure.supports[l].size()));
  return 2.0 * epsilon * epsilon * prod;
}

// Normalizing constant of the sparsity prior:
//   H_d = sum_{s=0}^{d} sum_{m=1}^{M_{d,s}} 2^{-sm},
// evaluated through the closed geometric form.  The s=0 layer contributes
// exactly 1.  H_1 = 1.75 and H_d <= e for all d.
inline double prior_normalizer(int d) {
  if (d < 1) throw ParameterError("prior_normalizer: d must be >= 1");
  double h = 1.0;
  for (int s = 1; s <= d; ++s) {
    double x = std::pow(2.0, -static_cast<double>(s));
    BigInt m_exact = count_supports(d, s);
    // x^M underflows to 0 well before M reaches 2^10; avoid huge pow args.
    double tail = 0.0;
    if (m_exact < 4096) {
      tail = std::pow(x, to_double(m_exact));
    }
    h += x * (1.0 - tail) / (1.0 - x);
  }
  return h;
}

// Prior evaluation context.  Caches the stratum counts
// |{eta with m supports of size <= s, at least one of size s}|
//   = C(M_{d,s}, m) - C(M_{d,s-1}, m)
// because the MCMC target evaluates the prior millions of times.
class PriorContext {
 public:
  PriorContext(int d, int grid_size) : d_(d), grid_size_(grid_size) {
    if (grid_size < 1) throw ParameterError("prior: grid size must be >= 1");
    log_h_ = std::log(prior_normalizer(d));
  }

  int grid_size() const { return grid_size_; }
  double log_normalizer() const { return log_h_; }

  double log_stratum_count(int s, int m) const {
    auto key = std::make_pair(s, m);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    BigInt count = binomial_exact(to_long(count_supports(d_, s)), m) -
                   binomial_exact(to_long(count_supports(d_, s - 1)), m);
    if (count <= 0)
      throw ParameterError("prior: no pattern with m=" + std::to_string(m) +
                           " supports in stratum s=" + std::to_string(s));
    double v = log_big(count);
    cache_.emplace(key, v);
    return v;
  }

  // log pi for a candidate in stratum s with m supports:
  //   pi = 2^{-sm} / (H_d * G^m * stratum_count)
  // and the single constant candidate gets pi = 1 / H_d.
  double log_prior(const Candidate& c) const {
    int s = c.stratum();
    int m = c.m();
    if (m == 0) return -log_h_;
    return -static_cast<double>(s) * m * std::log(2.0) - log_h_ -
           m * std::log(static_cast<double>(grid_size_)) - log_stratum_count(s, m);
  }

 private:
  static long to_long(const BigInt& v) {
    if (v > std::numeric_limits<long>::max())
      throw CapacityError("prior: support count does not fit a machine integer");
    return v.convert_to<long>();
  }

  int d_;
  int grid_size_;
  double log_h_;
  mutable std::map<std::pair<int, int>, double> cache_;
};

inline double log_prior(const Candidate& c, int d, int grid_size) {
  return PriorContext(d, grid_size).log_prior(c);
}

// Un-normalized log aggregation weight at temperature 4 eps^2:
//   log w = -(|Y - theta_hat|^2 + pen) / (4 eps^2) + log pi.
// The candidate keeps the observation verbatim on its filter, so the
// residual is the energy off the filter.  It is summed directly over the
// indices the candidate drops: every candidate keeps the zero index, so
// Y_0 never enters any weight and shifting Y_0 leaves the ensemble
// bit-identical.
inline double log_weight_unnormalized(const SequenceObservation& obs, const Candidate& c,
                                      const PriorContext& prior) {
  check_candidate_against(obs, c);
  double resid = 0.0;
  for (const auto& [j, y] : obs.values)
    if (!candidate_keeps(c, j)) resid += y * y;
  double denom = 4.0 * obs.epsilon * obs.epsilon;
  return -(resid + penalty(c, obs.epsilon)) / denom + prior.log_prior(c);
}

struct WeightedEnsemble {
  std::vector<Candidate> candidates;
  std::vector<double> log_weights;  // normalized: log-sum-exp == 0

  std::vector<double> weights() const {
    std::vector<double> w(log_weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i]);
    return w;
  }
};

struct AggregateResult {
  WeightedEnsemble ensemble;
  CoefficientMap estimate;
};

inline double log_sum_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Exponential-weights aggregation over an explicit candidate list.
inline AggregateResult exact_aggregate(const SequenceObservation& obs,
                                       const std::vector<Candidate>& candidates) {
  if (candidates.empty()) throw ParameterError("aggregate: empty candidate set");
  PriorContext prior(obs.d, obs.cutoff + 1);
  std::vector<double> lw(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    lw[i] = log_weight_unnormalized(obs, candidates[i], prior);
  double lse = log_sum_exp(lw);
  for (double& x : lw) x -= lse;

  CoefficientMap gate(obs.d);  // per-index total weight in [0,1]
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double w = std::exp(lw[i]);
    if (w == 0.0) continue;
    for (const MultiIndex& j : filter_indices(candidates[i])) gate.add(j, w);
  }
  CoefficientMap est(obs.d);
  for (const auto& [j, g] : gate.values) {
    auto it = obs.values.find(j);
    if (it != obs.values.end()) est.set(j, g * it->second);
  }
  // Every candidate keeps the zero index, so its gate is exactly one; shift
  // equivariance in Y_0 is exact rather than up to weight-rounding.
  est.set(MultiIndex::zero(obs.d), obs.at(MultiIndex::zero(obs.d)));
  AggregateResult out;
  out.ensemble.candidates = candidates;
  out.ensemble.log_weights = std::move(lw);
  out.estimate = std::move(est);
  return out;
}

// Bandwidth minimizing the projection risk bound over a Sobolev atom of
// support size v: floor of (L / (3^v eps^2))^{1/(2 beta + v)}, capped at
// eps^{-2} and at the observation cutoff.
inline int lemma1_bandwidth(double beta, double L, double epsilon, int support_size, int cutoff) {
  check_noise_level(epsilon);
  if (support_size < 1) throw ParameterError("lemma1_bandwidth: support size must be >= 1");
  if (beta <= 0) throw ParameterError("lemma1_bandwidth: beta must be > 0");
  double e2 = epsilon * epsilon;
  if (!(L >= e2))
    throw ParameterError("lemma1_bandwidth: precondition L >= epsilon^2 violated (L=" +
                         format_double(L) + ", epsilon^2=" + format_double(e2) + ")");
  if (!(std::log(1.0 / e2) >= std::log(L) / (2.0 * beta)))
    throw ParameterError(
        "lemma1_bandwidth: precondition log(epsilon^-2) >= log(L)/(2 beta) violated");
  double v = static_cast<double>(support_size);
  double t_real = std::pow(L / (std::pow(3.0, v) * e2), 1.0 / (2.0 * beta + v));
  double capped = std::min(t_real, 1.0 / e2);
  int t = static_cast<int>(std::floor(capped));
  return std::min(t, cutoff);
}

// All candidates for (d, s_max, cutoff, rule): the constant candidate plus
// every admissible support pattern crossed with per-support bandwidths in
// [0, cutoff].  Throws CapacityError past the ceiling; MCMC has no such
// limit and is the intended fallback.
inline std::vector<Candidate> enumerate_candidates(int d, int s_max, int cutoff, FamilyRule rule,
                                                   std::size_t ceiling = 1000000) {
  if (d < 1) throw ParameterError("enumerate_candidates: d must be >= 1");
  if (s_max < 0 || s_max > d) throw ParameterError("enumerate_candidates: s must be in [0,d]");
  if (cutoff < 0) throw ParameterError("enumerate_candidates: cutoff must be >= 0");

  // Admissible supports in lexicographic order.
  std::vector<std::vector<int>> all;
  std::vector<int> cur;
  auto gen = [&](auto&& self, int next) -> void {
    if (!cur.empty()) all.push_back(cur);
    if (static_cast<int>(cur.size()) == s_max) return;
    for (int c = next; c <= d; ++c) {
      cur.push_back(c);
      self(self, c + 1);
      cur.pop_back();
    }
  };
  gen(gen, 1);
  std::sort(all.begin(), all.end());

  std::vector<Candidate> out;
  out.push_back(Candidate::constant(d));
  std::vector<std::vector<int>> chosen;
  const long grid = cutoff + 1;

  auto expand_bandwidths = [&](const std::vector<std::vector<int>>& supports) {
    Structure st;
    st.d = d;
    st.s = s_max;
    st.rule = rule;
    st.supports = supports;
    std::vector<int> t(supports.size(), 0);
    while (true) {
      if (out.size() >= ceiling)
        throw CapacityError("candidate space for d=" + std::to_string(d) + ", s=" +
                            std::to_string(s_max) + ", cutoff=" + std::to_string(cutoff) +
                            " exceeds the ceiling of " + std::to_string(ceiling) +
                            " candidates; use the mcmc mode instead of exact aggregation");
      out.push_back(Candidate{st, t});
      int pos = static_cast<int>(t.size()) - 1;
      while (pos >= 0 && t[pos] == grid - 1) t[pos--] = 0;
      if (pos < 0) break;
      ++t[pos];
    }
  };

  auto rec = [&](auto&& self, std::size_t next) -> void {
    if (!chosen.empty()) expand_bandwidths(chosen);
    for (std::size_t i = next; i < all.size(); ++i) {
      chosen.push_back(all[i]);
      if (family_rule_ok(rule, chosen))
        self(self, i + 1);
      chosen.pop_back();
    }
  };
  rec(rec, 0);

  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    return candidate_less(a, b);
  });
  return out;
}

}  // namespace compound
