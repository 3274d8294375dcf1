#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "compound/aggregate.hpp"
#include "compound/combinatorics.hpp"
#include "compound/compound_model.hpp"
#include "compound/errors.hpp"
#include "compound/io.hpp"
#include "compound/sequence_model.hpp"

namespace compound {

// An unordered collection of m pairwise-disjoint blocks of exactly s
// coordinates.  Blocks are sorted internally and ordered by smallest
// element, which for disjoint blocks coincides with lexicographic order.
using Partition = std::vector<std::vector<int>>;

inline void validate_partition_shape(long d, long s, long m) {
  if (d < 1 || s < 1 || m < 1)
    throw ParameterError("partitions: need d >= 1, s >= 1, m >= 1");
  if (m * s > d)
    throw ParameterError("partitions: m*s = " + std::to_string(m * s) + " exceeds d = " +
                         std::to_string(d));
}

// |P^d_{s,m}| = C(d, ms) (ms)! / ((s!)^m m!).
inline BigInt partition_count_closed_form(long d, long s, long m) {
  validate_partition_shape(d, s, m);
  BigInt r = binomial_exact(d, m * s) * factorial_exact(m * s);
  r /= boost::multiprecision::pow(factorial_exact(s), static_cast<unsigned>(m));
  r /= factorial_exact(m);
  return r;
}

inline std::vector<Partition> enumerate_partitions(int d, int s, int m,
                                                   std::size_t ceiling = 10000000) {
  validate_partition_shape(d, s, m);
  BigInt total = partition_count_closed_form(d, s, m);
  if (total > ceiling)
    throw CapacityError("partition family for d=" + std::to_string(d) + ", s=" + std::to_string(s) +
                        ", m=" + std::to_string(m) + " has " + total.str() +
                        " members, over the enumeration ceiling of " + std::to_string(ceiling));
  std::vector<Partition> out;
  std::vector<int> used_coords;   // support set under construction
  Partition blocks;

  // Split a fully chosen support set into blocks: the first block owns the
  // smallest remaining coordinate, killing the m! relabelings.
  std::vector<int> rest;
  auto split = [&](auto&& self, std::size_t blocks_left) -> void {
    if (blocks_left == 0) {
      out.push_back(blocks);
      return;
    }
    int anchor = rest.front();
    std::vector<int> pool(rest.begin() + 1, rest.end());
    std::vector<int> pick;
    auto choose = [&](auto&& me, std::size_t from) -> void {
      if (static_cast<int>(pick.size()) == s - 1) {
        std::vector<int> block;
        block.push_back(anchor);
        block.insert(block.end(), pick.begin(), pick.end());
        std::vector<int> saved = rest;
        rest.clear();
        for (int c : saved)
          if (std::find(block.begin(), block.end(), c) == block.end()) rest.push_back(c);
        blocks.push_back(block);
        self(self, blocks_left - 1);
        blocks.pop_back();
        rest = saved;
        return;
      }
      for (std::size_t i = from; i < pool.size(); ++i) {
        pick.push_back(pool[i]);
        me(me, i + 1);
        pick.pop_back();
      }
    };
    choose(choose, 0);
  };

  // Choose the ms-coordinate support set.
  auto choose_support = [&](auto&& self, int next) -> void {
    if (static_cast<int>(used_coords.size()) == m * s) {
      rest = used_coords;
      split(split, m);
      return;
    }
    for (int c = next; c <= d; ++c) {
      used_coords.push_back(c);
      self(self, c + 1);
      used_coords.pop_back();
    }
  };
  choose_support(choose_support, 1);
  return out;
}

// Fraction of blocks of p missing from q; ranges over {0, 1/m, ..., 1}.
inline double rho_distance(const Partition& p, const Partition& q) {
  if (p.size() != q.size())
    throw ParameterError("rho: partitions have different block counts");
  std::size_t shared = 0;
  auto ip = p.begin();
  auto iq = q.begin();
  while (ip != p.end() && iq != q.end()) {
    if (*ip < *iq) ++ip;
    else if (*iq < *ip) ++iq;
    else { ++shared; ++ip; ++iq; }
  }
  return static_cast<double>(p.size() - shared) / static_cast<double>(p.size());
}

// Two-sided bounds on log |P^d_{s,m}|:
//   lower  s^{-(m-1)/2} (d/(s m^{1/s}))^{ms}   upper  (e^2 d/(s m^{1/s}))^{ms}
struct Sandwich {
  double lower = 0.0;
  double upper = 0.0;
};

inline Sandwich partition_count_sandwich(int d, int s, int m) {
  validate_partition_shape(d, s, m);
  double base = d / (s * std::pow(static_cast<double>(m), 1.0 / s));
  Sandwich sw;
  sw.lower = std::pow(static_cast<double>(s), -(m - 1) / 2.0) *
             std::pow(base, static_cast<double>(m) * s);
  sw.upper = std::pow(std::exp(2.0) * base, static_cast<double>(m) * s);
  return sw;
}

// Packing-number lower bound for separation theta in (0, 1/8]:
//   log N >= -m log(8 e^{7/8} sqrt(s) / 7) + (ms/3) log(d/(s m^{1/s})).
inline double packing_log_lower_bound(int d, int s, int m, double theta) {
  validate_partition_shape(d, s, m);
  if (!(theta > 0.0 && theta <= 0.125))
    throw ParameterError("packing bound: theta must be in (0, 1/8]");
  double first = -m * std::log(8.0 * std::exp(7.0 / 8.0) * std::sqrt(static_cast<double>(s)) / 7.0);
  double second = (static_cast<double>(m) * s / 3.0) *
                  std::log(d / (s * std::pow(static_cast<double>(m), 1.0 / s)));
  return first + second;
}

struct PackingSet {
  int d = 0, s = 0, m = 0;
  double theta = 0.0;
  std::vector<Partition> members;
};

// First-fit greedy packing in enumeration order.  By construction every
// rejected partition is within < theta of some member, so the result is a
// maximal theta-separated set.
inline PackingSet greedy_packing(int d, int s, int m, double theta,
                                 std::size_t ceiling = 10000000) {
  if (!(theta > 0.0 && theta <= 1.0))
    throw ParameterError("greedy_packing: theta must be in (0, 1]");
  PackingSet ps;
  ps.d = d;
  ps.s = s;
  ps.m = m;
  ps.theta = theta;
  for (const Partition& p : enumerate_partitions(d, s, m, ceiling)) {
    bool ok = true;
    for (const Partition& q : ps.members) {
      if (rho_distance(p, q) < theta) {
        ok = false;
        break;
      }
    }
    if (ok) ps.members.push_back(p);
  }
  return ps;
}

inline std::string serialize_partition(const Partition& p) {
  std::string out;
  for (std::size_t b = 0; b < p.size(); ++b) {
    if (b) out += "|";
    for (std::size_t i = 0; i < p[b].size(); ++i) {
      if (i) out += ",";
      out += std::to_string(p[b][i]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary hypercube codes.

struct HypercubeCode {
  int n = 0;
  int min_distance = 0;          // guaranteed pairwise distance, ceil(n/8)
  std::vector<std::uint32_t> words;  // ascending; 0 is always first
};

// Greedy code over {0,1}^n with pairwise Hamming distance >= ceil(n/8),
// built by marking Hamming balls of radius ceil(n/8)-1 around accepted
// words.  The greedy set has at least 2^{n/8} words (Gilbert bound).
inline HypercubeCode varshamov_gilbert_code(int n, int max_n = 24) {
  if (n < 1) throw ParameterError("code: word length must be >= 1");
  if (n > max_n)
    throw CapacityError("code: word length " + std::to_string(n) + " exceeds the ceiling " +
                        std::to_string(max_n));
  int dist = (n + 7) / 8;
  int radius = dist - 1;
  std::vector<bool> covered(std::size_t{1} << n, false);
  HypercubeCode code;
  code.n = n;
  code.min_distance = dist;

  auto mark = [&](auto&& self, std::uint32_t w, int from, int left) -> void {
    covered[w] = true;
    if (left == 0) return;
    for (int i = from; i < n; ++i) self(self, w ^ (1u << i), i + 1, left - 1);
  };
  for (std::uint32_t w = 0; w < (std::uint32_t{1} << n); ++w) {
    if (covered[w]) continue;
    code.words.push_back(w);
    mark(mark, w, 0, radius);
  }
  return code;
}

inline int hamming(std::uint32_t a, std::uint32_t b) { return std::popcount(a ^ b); }

// ---------------------------------------------------------------------------
// Code-indexed smooth family on s coordinates (single block at full size).

struct CodeFamily {
  int s = 0;
  int t = 0;
  double gamma = 0.0;
  std::vector<MultiIndex> index_set;   // (2t+1)^s frequencies, lex order
  HypercubeCode code;
  // One function per code word, in word order; capped at member_cap so a
  // large code does not materialize gigabytes of maps.
  std::vector<CoefficientMap> members;
};

// f_w = gamma * sum_{i : w_i = 1} phi_{k_i} over the box |k|_inf <= t.
// Norms and distances are exact bit-counts: ||f_w||^2 = gamma^2 |w|_1 and
// ||f_w - f_w'||^2 = gamma^2 * Hamming(w, w').
inline CodeFamily code_family(double gamma, int t, int s, double beta, int max_n = 24,
                              std::size_t member_cap = SIZE_MAX) {
  if (t < 4) throw ParameterError("code family: t must be >= 4");
  if (s < 1) throw ParameterError("code family: s must be >= 1");
  if (gamma <= 0) throw ParameterError("code family: gamma must be > 0");
  double membership = gamma * gamma * std::pow(2.0 * t + 1.0, 2.0 * beta + s);
  if (membership > 1.0 + 1e-12)
    throw ParameterError("code family: gamma^2 (2t+1)^{2 beta + s} = " + format_double(membership) +
                         " > 1, members leave the smoothness ball");
  double n_real = std::pow(2.0 * t + 1.0, static_cast<double>(s));
  if (n_real > max_n)
    throw CapacityError("code family: |I| = (2t+1)^s = " + format_double(n_real) +
                        " exceeds the code-length ceiling " + std::to_string(max_n));
  CodeFamily fam;
  fam.s = s;
  fam.t = t;
  fam.gamma = gamma;
  fam.index_set = enumerate_indices(IndexBox(s, t));
  fam.code = varshamov_gilbert_code(static_cast<int>(fam.index_set.size()), max_n);
  std::size_t take = std::min(member_cap, fam.code.words.size());
  for (std::size_t wi = 0; wi < take; ++wi) {
    std::uint32_t w = fam.code.words[wi];
    CoefficientMap f(s);
    for (std::size_t i = 0; i < fam.index_set.size(); ++i)
      if (w & (1u << i)) f.set(fam.index_set[i], gamma);
    fam.members.push_back(std::move(f));
  }
  return fam;
}

struct CodeFamilyRecipe {
  int t = 0;
  double gamma = 0.0;
};

// Width and amplitude tuned so the average KL to the zero member stays
// under log|code|/16: t = floor(4 eps^{-2/(2 beta + s)}) and
// gamma^{-2} = (2t+1)^{2 beta + s} + 64 eps^{-2} / log 2.
inline CodeFamilyRecipe recommended_code_recipe(double epsilon, double beta, int s) {
  check_noise_level(epsilon);
  if (beta <= 0 || s < 1) throw ParameterError("code recipe: need beta > 0, s >= 1");
  CodeFamilyRecipe r;
  r.t = static_cast<int>(std::floor(4.0 * std::pow(epsilon, -2.0 / (2.0 * beta + s))));
  double inv_g2 = std::pow(2.0 * r.t + 1.0, 2.0 * beta + s) +
                  64.0 / (epsilon * epsilon * std::log(2.0));
  r.gamma = 1.0 / std::sqrt(inv_g2);
  return r;
}

// ---------------------------------------------------------------------------
// Partition-indexed family: one rank-one atom per block, signs per
// coordinate.

// tau = (1/4) min( eps sqrt(ms log 2 + log K), sqrt(L) ).
inline double partition_family_amplitude(double L, double epsilon, int m, int s, std::size_t K) {
  check_noise_level(epsilon);
  if (L <= 0 || m < 1 || s < 1 || K < 1)
    throw ParameterError("partition family: need L > 0, m >= 1, s >= 1, K >= 1");
  double a = epsilon * std::sqrt(m * s * std::log(2.0) + std::log(static_cast<double>(K)));
  return 0.25 * std::min(a, std::sqrt(L));
}

// f = (tau / sqrt(m)) sum_{V in partition} prod_{c in V} phi_{sign_c}(x_c):
// each block contributes one coefficient at the index with entries +-1 on
// the block and 0 elsewhere.
inline CoefficientMap partition_member(int d, const Partition& partition,
                                       const std::vector<int>& signs, double tau) {
  if (static_cast<int>(signs.size()) != d)
    throw ParameterError("partition member: need one sign per coordinate");
  for (int v : signs)
    if (v != 1 && v != -1) throw ParameterError("partition member: signs must be +-1");
  CoefficientMap f(d);
  double amp = tau / std::sqrt(static_cast<double>(partition.size()));
  for (const auto& block : partition) {
    std::vector<int> e(d, 0);
    for (int c : block) {
      if (c < 1 || c > d) throw ParameterError("partition member: block coordinate outside [1,d]");
      e[c - 1] = signs[c - 1];
    }
    f.set(MultiIndex(std::move(e)), amp);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Check reports shared by the CLI verification command and the tests.

struct CheckReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool passed = false;
};

inline CheckReport check_le(std::string name, double lhs, double rhs, double tol = 0.0) {
  return CheckReport{std::move(name), lhs, rhs, lhs <= rhs + tol};
}

inline CheckReport check_ge(std::string name, double lhs, double rhs, double tol = 0.0) {
  return CheckReport{std::move(name), lhs, rhs, lhs >= rhs - tol};
}

inline CheckReport check_eq(std::string name, double lhs, double rhs, double tol = 0.0) {
  return CheckReport{std::move(name), lhs, rhs, std::abs(lhs - rhs) <= tol};
}

// Exhaustive M_{d,s}: count subsets of {1..d} of size <= s directly.
inline long count_supports_exhaustive(int d, int s) {
  long count = 0;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int next) -> void {
    ++count;  // counts the current subset, the empty one included
    if (static_cast<int>(cur.size()) == s) return;
    for (int c = next; c <= d; ++c) {
      cur.push_back(c);
      self(self, c + 1);
      cur.pop_back();
    }
  };
  rec(rec, 1);
  return count;
}

// Exhaustive |B^d_{s,m}|: m-subsets of the support pool of size M_{d,s}.
inline long count_patterns_exhaustive(int d, int s, int m) {
  long pool = count_supports_exhaustive(d, s);
  long count = 0;
  auto rec = [&](auto&& self, long next, int left) -> void {
    if (left == 0) {
      ++count;
      return;
    }
    for (long i = next; i <= pool - left; ++i) self(self, i + 1, left - 1);
  };
  rec(rec, 0, m);
  return count;
}

inline std::string dsm_tag(int d, int s, int m) {
  return "d" + std::to_string(d) + "-s" + std::to_string(s) + "-m" + std::to_string(m);
}

// Counting suite: partition counts vs the closed form and its sandwich for
// every shape with d <= d_max; support/pattern counts against their
// exponential bounds; the prior normalizer against e.
inline std::vector<CheckReport> combinatorics_checks(int d_max = 8, int pattern_d_max = 6,
                                                     int pattern_s_max = 2, int pattern_m_max = 3,
                                                     int normalizer_d_max = 50) {
  std::vector<CheckReport> out;
  for (int d = 1; d <= d_max; ++d)
    for (int s = 1; s <= d; ++s)
      for (int m = 1; m * s <= d; ++m) {
        double exact = to_double(partition_count_closed_form(d, s, m));
        double enumerated = static_cast<double>(enumerate_partitions(d, s, m).size());
        out.push_back(check_eq("partition-count-" + dsm_tag(d, s, m), enumerated, exact));
        Sandwich sw = partition_count_sandwich(d, s, m);
        out.push_back(check_ge("partition-sandwich-lower-" + dsm_tag(d, s, m), exact, sw.lower));
        out.push_back(check_le("partition-sandwich-upper-" + dsm_tag(d, s, m), exact, sw.upper));
      }
  for (int d = 1; d <= pattern_d_max; ++d)
    for (int s = 1; s <= std::min(d, pattern_s_max); ++s) {
      double m_exact = to_double(count_supports(d, s));
      out.push_back(check_eq("support-count-d" + std::to_string(d) + "-s" + std::to_string(s),
                             static_cast<double>(count_supports_exhaustive(d, s)), m_exact));
      out.push_back(check_le("support-count-bound-d" + std::to_string(d) + "-s" + std::to_string(s),
                             m_exact, count_supports_bound(d, s)));
      for (int m = 1; m <= pattern_m_max; ++m) {
        double b_exact = to_double(binomial_exact(count_supports_exhaustive(d, s), m));
        out.push_back(check_eq("pattern-count-" + dsm_tag(d, s, m),
                               static_cast<double>(count_patterns_exhaustive(d, s, m)), b_exact));
        double bound = std::pow(std::exp(2.0) * d / (s * std::pow(static_cast<double>(m), 1.0 / s)),
                                static_cast<double>(m) * s);
        out.push_back(check_le("pattern-count-bound-" + dsm_tag(d, s, m), b_exact, bound));
      }
    }
  for (int d = 1; d <= normalizer_d_max; ++d)
    out.push_back(check_le("prior-normalizer-d" + std::to_string(d), prior_normalizer(d),
                           std::exp(1.0)));
  return out;
}

// Construction suite: the greedy packing beats its size bound and is
// maximal; the hypercube code has the promised size, spacing, and zero
// word; both hypothesis families satisfy their norm, distance, and KL
// identities to machine accuracy.
inline std::vector<CheckReport> construction_checks(int d = 12, int s = 1, int m = 2,
                                                    double theta = 0.125, double beta = 2.0,
                                                    double L = 1.0, double epsilon = 0.2) {
  constexpr double kExactTol = 1e-12;
  std::vector<CheckReport> out;

  PackingSet packing = greedy_packing(d, s, m, theta);
  std::vector<Partition> all = enumerate_partitions(d, s, m);
  double min_sep = 1.0;
  for (std::size_t i = 0; i < packing.members.size(); ++i)
    for (std::size_t j = i + 1; j < packing.members.size(); ++j)
      min_sep = std::min(min_sep, rho_distance(packing.members[i], packing.members[j]));
  if (packing.members.size() < 2) min_sep = 1.0;
  out.push_back(check_ge("packing-pairwise-separation", min_sep, theta));
  double covered = 0.0;
  for (const Partition& p : all) {
    for (const Partition& q : packing.members)
      if (rho_distance(p, q) < theta || p == q) {
        covered += 1.0;
        break;
      }
  }
  out.push_back(check_eq("packing-maximal", covered, static_cast<double>(all.size())));
  out.push_back(check_ge("packing-log-size-vs-lower-bound",
                         std::log(static_cast<double>(packing.members.size())),
                         packing_log_lower_bound(d, s, m, theta)));

  // Fixed-width code: length 9 is the smallest the family construction
  // allows (t = 4, one block coordinate) and is cheap to audit in full.
  HypercubeCode code9 = varshamov_gilbert_code(9);
  out.push_back(check_ge("code-size-n9", static_cast<double>(code9.words.size()),
                         std::pow(2.0, 9.0 / 8.0)));
  out.push_back(check_eq("code-zero-word-n9", static_cast<double>(code9.words.front()), 0.0));
  int min_ham = code9.n;
  for (std::size_t i = 0; i < code9.words.size(); ++i)
    for (std::size_t j = i + 1; j < code9.words.size(); ++j)
      min_ham = std::min(min_ham, hamming(code9.words[i], code9.words[j]));
  out.push_back(check_ge("code-min-distance-n9", static_cast<double>(min_ham),
                         static_cast<double>(code9.min_distance)));

  // Pairwise laws on the width-4 family at the largest in-ball amplitude.
  {
    double gamma = std::pow(9.0, -(2.0 * beta + 1.0) / 2.0);
    CodeFamily fam = code_family(gamma, 4, 1, beta);
    double g2 = gamma * gamma;
    double norm_err = 0.0, dist_err = 0.0;
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
      norm_err = std::max(norm_err, std::abs(fam.members[i].l2_sq() -
                                             g2 * std::popcount(fam.code.words[i])));
      for (std::size_t j = i + 1; j < fam.members.size(); ++j)
        dist_err = std::max(dist_err,
                            std::abs(distance_sq(fam.members[i], fam.members[j]) -
                                     g2 * hamming(fam.code.words[i], fam.code.words[j])));
    }
    out.push_back(check_le("code-family-norm-law", norm_err, kExactTol));
    out.push_back(check_le("code-family-distance-law", dist_err, kExactTol));
    // The amplitude saturates the budget, so leave room for pow() rounding.
    out.push_back(check_le("code-family-smoothness",
                           g2 * std::pow(2.0 * fam.t + 1.0, 2.0 * beta + fam.s), 1.0, 1e-9));
  }

  // KL budget at the recommended width/amplitude for the given noise level.
  // The code can run to thousands of words, so the norm law is audited on a
  // materialized window and the full-code average uses the bit-count norm.
  {
    CodeFamilyRecipe recipe = recommended_code_recipe(epsilon, beta, 1);
    CodeFamily fam = code_family(recipe.gamma, recipe.t, 1, beta, 24, 4096);
    double g2 = fam.gamma * fam.gamma;
    double norm_err = 0.0, kl_window_err = 0.0;
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
      int w1 = std::popcount(fam.code.words[i]);
      norm_err = std::max(norm_err, std::abs(fam.members[i].l2_sq() - g2 * w1));
      kl_window_err = std::max(kl_window_err,
                               std::abs(kl_divergence(fam.members[i], fam.members.front(),
                                                      epsilon) -
                                        0.5 * g2 * w1 / (epsilon * epsilon)));
    }
    double kl_sum = 0.0;
    for (std::uint32_t w : fam.code.words)
      kl_sum += 0.5 * g2 * std::popcount(w) / (epsilon * epsilon);
    out.push_back(check_le("code-family-recommended-norm-law", norm_err, kExactTol));
    out.push_back(check_le("code-family-recommended-kl-law", kl_window_err, kExactTol));
    out.push_back(check_le("code-family-kl-budget", kl_sum / fam.code.words.size(),
                           std::log(static_cast<double>(fam.code.words.size())) / 16.0));
  }

  double tau = partition_family_amplitude(L, epsilon, m, s, packing.members.size());
  std::vector<std::vector<int>> sign_choices;
  sign_choices.emplace_back(d, 1);
  std::vector<int> alternating(d, 1);
  for (int c = 1; c < d; c += 2) alternating[c] = -1;
  sign_choices.push_back(alternating);
  double pf_dist_err = 0.0, pf_kl_err = 0.0;
  CoefficientMap zero(d);
  for (const auto& signs : sign_choices) {
    std::vector<CoefficientMap> fs;
    for (const Partition& p : packing.members)
      fs.push_back(partition_member(d, p, signs, tau));
    for (std::size_t i = 0; i < fs.size(); ++i) {
      pf_kl_err = std::max(pf_kl_err, std::abs(kl_divergence(fs[i], zero, epsilon) -
                                               tau * tau / (2.0 * epsilon * epsilon)));
      for (std::size_t j = i + 1; j < fs.size(); ++j)
        pf_dist_err = std::max(
            pf_dist_err,
            std::abs(distance_sq(fs[i], fs[j]) -
                     2.0 * tau * tau * rho_distance(packing.members[i], packing.members[j])));
    }
  }
  out.push_back(check_le("partition-family-distance-law", pf_dist_err, kExactTol));
  out.push_back(check_le("partition-family-kl-identity", pf_kl_err, kExactTol));
  out.push_back(check_le("partition-family-smoothness", tau * tau / m, L));
  return out;
}

inline bool all_passed(const std::vector<CheckReport>& reports) {
  for (const CheckReport& r : reports)
    if (!r.passed) return false;
  return true;
}

}  // namespace compound
