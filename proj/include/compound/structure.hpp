#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "compound/errors.hpp"
#include "compound/io.hpp"

namespace compound {

enum class FamilyRule { disjoint, overlap_at_most_one, unrestricted };

inline const char* to_string(FamilyRule r) {
  switch (r) {
    case FamilyRule::disjoint: return "disjoint";
    case FamilyRule::overlap_at_most_one: return "overlap-at-most-one";
    case FamilyRule::unrestricted: return "unrestricted";
  }
  return "?";
}

inline FamilyRule parse_family_rule(const std::string& s) {
  if (s == "disjoint") return FamilyRule::disjoint;
  if (s == "overlap-at-most-one") return FamilyRule::overlap_at_most_one;
  if (s == "unrestricted") return FamilyRule::unrestricted;
  throw ParameterError("unknown family rule '" + s +
                       "' (expected disjoint | overlap-at-most-one | unrestricted)");
}

// Largest-constant factor of the norm-compatibility condition
//   || sum_V f_V ||^2 <= C * sum_V || f_V ||^2
// guaranteed for each family rule.  Unrestricted families carry no
// guarantee; callers that need a constant must supply their own.
inline double family_constant(FamilyRule r) {
  switch (r) {
    case FamilyRule::disjoint: return 1.0;
    case FamilyRule::overlap_at_most_one: return 1.5;
    case FamilyRule::unrestricted:
      throw ParameterError("no norm-compatibility constant for the unrestricted family rule");
  }
  return 0.0;
}

// A sparsity pattern: m distinct supports V_1..V_m, each a set of at most s
// coordinates out of {1..d}.  Supports are stored sorted (inside each
// support and across the list) so equality and serialization are canonical.
// The empty structure (m=0) is the pattern of the pure-constant model.
struct Structure {
  int d = 0;
  int s = 0;  // declared ceiling on support size, not the realized maximum
  FamilyRule rule = FamilyRule::disjoint;
  std::vector<std::vector<int>> supports;

  int m() const { return static_cast<int>(supports.size()); }

  // Realized stratum: the largest support size, 0 for the empty structure.
  int stratum() const {
    std::size_t k = 0;
    for (const auto& v : supports) k = std::max(k, v.size());
    return static_cast<int>(k);
  }

  static Structure empty(int d) {
    Structure st;
    st.d = d;
    st.s = 0;
    st.rule = FamilyRule::disjoint;
    return st;
  }
};

inline int overlap_size(const std::vector<int>& a, const std::vector<int>& b) {
  int n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) ++ia;
    else if (*ib < *ia) ++ib;
    else { ++n; ++ia; ++ib; }
  }
  return n;
}

inline bool family_rule_ok(FamilyRule rule, const std::vector<std::vector<int>>& supports) {
  if (rule == FamilyRule::unrestricted) return true;
  int m = static_cast<int>(supports.size());
  for (int i = 0; i < m; ++i) {
    int partners = 0;  // supports sharing at least one coordinate with i
    for (int k = 0; k < m; ++k) {
      if (k == i) continue;
      if (overlap_size(supports[i], supports[k]) > 0) ++partners;
    }
    if (rule == FamilyRule::disjoint && partners > 0) return false;
    if (rule == FamilyRule::overlap_at_most_one && partners > 1) return false;
  }
  return true;
}

inline void check_family_rule(FamilyRule rule, const std::vector<std::vector<int>>& supports) {
  if (family_rule_ok(rule, supports)) return;
  if (rule == FamilyRule::disjoint)
    throw ParameterError("family rule 'disjoint' violated: supports overlap");
  throw ParameterError(
      "family rule 'overlap-at-most-one' violated: a support overlaps more than one other");
}

// Validating constructor for user-supplied patterns.
inline Structure make_structure(int d, int s, std::vector<std::vector<int>> supports,
                                FamilyRule rule) {
  if (d < 1) throw ParameterError("structure: d must be >= 1, got " + std::to_string(d));
  if (s < 1) throw ParameterError("structure: s must be >= 1, got " + std::to_string(s));
  if (s > d) throw ParameterError("structure: s must be <= d");
  if (supports.empty())
    throw ParameterError("structure: the support list is empty (use Structure::empty for the constant model)");
  for (auto& v : supports) {
    if (v.empty()) throw ParameterError("structure: a support is empty");
    std::sort(v.begin(), v.end());
    if (std::adjacent_find(v.begin(), v.end()) != v.end())
      throw ParameterError("structure: a support lists a coordinate twice");
    if (v.front() < 1 || v.back() > d)
      throw ParameterError("structure: support coordinate outside [1," + std::to_string(d) + "]");
    if (static_cast<int>(v.size()) > s)
      throw ParameterError("structure: support size " + std::to_string(v.size()) +
                           " exceeds s=" + std::to_string(s));
  }
  std::sort(supports.begin(), supports.end());
  if (std::adjacent_find(supports.begin(), supports.end()) != supports.end())
    throw ParameterError("structure: duplicate support");
  check_family_rule(rule, supports);
  Structure st;
  st.d = d;
  st.s = s;
  st.rule = rule;
  st.supports = std::move(supports);
  return st;
}

// One line per support, comma-separated sorted coordinates.
inline std::string serialize_structure(const Structure& st) {
  std::string out;
  for (const auto& v : st.supports) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(v[i]);
    }
    out += "\n";
  }
  return out;
}

inline Structure parse_structure(const std::string& text, int d, int s, FamilyRule rule) {
  std::vector<std::vector<int>> supports;
  for (const std::string& raw : split(text, '\n')) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::vector<int> v;
    for (const std::string& tok : split(line, ',')) v.push_back(static_cast<int>(parse_long(trim(tok))));
    supports.push_back(std::move(v));
  }
  if (supports.empty()) return Structure::empty(d);
  return make_structure(d, s, std::move(supports), rule);
}

inline Structure load_structure(const std::filesystem::path& path, int d, int s, FamilyRule rule) {
  return parse_structure(read_file(path), d, s, rule);
}

}  // namespace compound
